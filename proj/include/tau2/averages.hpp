#pragma once

#include "tau2/model.hpp"

namespace tau2 {

// Average values of the Yang-Baxter generators: O(Lambda) = prod_k O(q^k lambda),
// Lambda = lambda^p. A and D have Laurent degree N, B and C degree N-1.
struct AverageMatrix {
  LaurentPoly A, B, C, D;  // in Lambda

  cplx eval(char tag, cplx Lambda) const {
    switch (tag) {
      case 'A': return A.eval(Lambda);
      case 'B': return B.eval(Lambda);
      case 'C': return C.eval(Lambda);
      default: return D.eval(Lambda);
    }
  }
  LaurentPoly trace() const { return A + D; }
  LaurentPoly det() const { return A * D - B * C; }
};

// 2x2 average Lax matrix of site n, entries Laurent degree 1 in Lambda.
AverageMatrix average_lax(const ModelParams& p, int n);

// product L_hi ... L_lo of average Lax matrices
AverageMatrix average_monodromy(const ModelParams& p, int lo, int hi);
inline AverageMatrix average_monodromy(const ModelParams& p) {
  return average_monodromy(p, 1, p.N());
}

// q-orbit product of the operator O(q^k lambda); asserts centrality and returns
// the scalar. centrality_dev (if given) receives ||O - (trO/dim) Id|| / ||O||.
cplx operator_average(const CyclicSpace& sp, const ModelParams& p, char tag, cplx Lambda,
                      double* centrality_dev = nullptr, double tol = 1e-6);

// q-orbit product of the quantum determinant, as a Laurent polynomial in Lambda
LaurentPoly qdet_average(const ModelParams& p);

// eigenvalues of the 2x2 average matrix at Lambda, deterministically ordered
// (larger modulus first, ties by argument)
std::pair<cplx, cplx> omega_eigenvalues(const AverageMatrix& m, cplx Lambda);

}  // namespace tau2
