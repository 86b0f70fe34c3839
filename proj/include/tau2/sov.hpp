#pragma once

#include "tau2/averages.hpp"

namespace tau2 {

// Grid of separate variables: eta_a^{(k)} = q^k eta_a^{(0)} with (eta_a^{(0)})^p = Z_a.
// Z[0..N-2] are the zeros of the B-average (one representative per +- pair,
// argument in [0,pi)); Z[N-1] is fixed by the leading coefficient. Tuples are
// indexed like StateIndex (variable 1 least significant).
struct SOVGrid {
  UnityRoot root;
  int N = 0;
  std::vector<cplx> Z;
  std::vector<cplx> eta0;

  long dim() const {
    long d = 1;
    for (int i = 0; i < N; ++i) d *= root.p;
    return d;
  }
  cplx eta(int a, int k) const { return root.q_pow(k) * eta0[static_cast<size_t>(a - 1)]; }
  int digit(long idx, int a) const {
    long v = idx;
    for (int s = 1; s < a; ++s) v /= root.p;
    return static_cast<int>(v % root.p);
  }
  long shift(long idx, int a, int by) const {
    long stride = 1;
    for (int s = 1; s < a; ++s) stride *= root.p;
    int k = digit(idx, a) + by;
    k %= root.p;
    if (k < 0) k += root.p;
    return idx + (static_cast<long>(k) - digit(idx, a)) * stride;
  }
  // b_eta(lambda) = prod_{a<N} (lambda/eta_a - eta_a/lambda) for the tuple idx
  cplx b_eta(long idx, cplx lambda) const {
    cplx v(1, 0);
    for (int a = 1; a < N; ++a) {
      const cplx e = eta(a, digit(idx, a));
      v *= lambda / e - e / lambda;
    }
    return v;
  }
  cplx eigenvalue(long idx, cplx lambda) const {
    return eta(N, digit(idx, N)) * b_eta(idx, lambda);
  }
};

// Gauge coefficients a^(SOV), d^(SOV) on the orbit of each separate variable;
// aS[r-1][j] is the value at lambda = q^j eta_r^{(0)}.
struct SOVCoeffs {
  std::vector<std::vector<cplx>> aS, dS;
  double qdet_residual = 0;    // worst relative violation of the determinant condition
  double average_residual = 0; // worst relative violation of the orbit-product identities
};

struct SOVBasis {
  SOVGrid grid;
  SOVCoeffs coeffs;
  Mat rows;  // p^N x p^N, row index = tuple index
};

// Laurent polynomials a(lambda), d(lambda) of the gauge choice; they satisfy
// det_q M(lambda) = a(lambda) d(lambda/q).
LaurentPoly gauge_poly_a(const ModelParams& p);
LaurentPoly gauge_poly_d(const ModelParams& p);

// Z determination from the zeros of the B-average; split_M selects the
// consistency split (head sites) used for the cross-check.
SOVGrid compute_Z(const ModelParams& p, int split_M = 1, double degeneracy_tol = 1e-6);

SOVCoeffs sov_coefficients(const ModelParams& p, const SOVGrid& grid);

// N = 1 covector basis in the u-eigenbasis representation.
SOVBasis site1_basis(const ModelParams& p);

// Recursive construction (one site peeled per level).
SOVBasis sov_basis_recursive(const CyclicSpace& sp, const ModelParams& p);

// Direct construction: left-diagonalize B(lambda*) and label rows against the grid.
SOVBasis sov_basis_direct(const CyclicSpace& sp, const ModelParams& p, unsigned attempt = 0);

// Rescale rows so that <eta| D(eta_r) = d^(SOV)(eta_r) <q^{delta_r} eta| and
// <eta| Theta = <eta(k_N - 1)| hold exactly; returns the worst collinearity
// residual encountered while fitting the scale factors.
double regauge_basis(const CyclicSpace& sp, const ModelParams& p, SOVBasis& basis);

struct ActionReport {
  double a_collinearity = 0;   // off-direction leakage of <eta| A(eta_a)
  double a_coeff_residual = 0; // empirical A coefficients vs a^(SOV)
  double d_coeff_residual = 0;
  double a_orbit_residual = 0; // orbit products vs calA(Z_a)
  double d_orbit_residual = 0;
  double qdet_condition = 0;   // a^(SOV)(eta) d^(SOV)(eta/q) vs det_q M(eta)
  double interp_identity = 0;  // full action formula at off-grid lambda
  double theta_residual = 0;   // <eta|Theta = <eta(k_N-1)|
  double max() const {
    return std::max({a_collinearity, a_coeff_residual, d_coeff_residual, a_orbit_residual,
                     d_orbit_residual, qdet_condition, interp_identity, theta_residual});
  }
};

ActionReport verify_actions(const CyclicSpace& sp, const ModelParams& p, const SOVBasis& basis);

// Per-row scalar match between two bases: max_eta min_c ||r1 - c r2|| / ||r1||.
double basis_match_residual(const SOVBasis& b1, const SOVBasis& b2);

}  // namespace tau2
