#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tau2/laurent.hpp"
#include "tau2/weyl.hpp"

namespace tau2 {

// Per-site representation constants of the Lax operator.
struct SiteParams {
  cplx alpha, beta, gamma, delta;  // diagonal entries
  cplx a, b, c, d;                 // off-diagonal entries (blackboard a,b,c,d)

  // alpha*gamma = a*c and beta*delta = b*d
  double constraint_residual() const;
};

struct ModelParams {
  UnityRoot root;
  std::vector<SiteParams> sites;

  int N() const { return static_cast<int>(sites.size()); }
  ModelParams subchain(int lo, int hi) const;  // 1-based, inclusive

  // asymptotic constants over sites [lo..hi]
  cplx a_plus(int lo, int hi) const;
  cplx a_minus(int lo, int hi) const;
  cplx d_plus(int lo, int hi) const;
  cplx d_minus(int lo, int hi) const;
  cplx a_plus() const { return a_plus(1, N()); }
  cplx a_minus() const { return a_minus(1, N()); }
  cplx d_plus() const { return d_plus(1, N()); }
  cplx d_minus() const { return d_minus(1, N()); }

  // local quantum-determinant data (principal square-root branches)
  cplx k_n(int n) const;
  cplx mu_plus(int n) const;
  cplx mu_minus(int n) const;
};

// Random representation: moduli uniform in [mod_min, mod_max], phases uniform;
// gamma and delta always derived from the constraints.
ModelParams sample_params(const UnityRoot& root, int N, std::uint64_t seed, double mod_min = 0.5,
                          double mod_max = 2.0);

// Self-adjoint representation from free (alpha_n, a_n, b_n), epsilon = +-1.
ModelParams make_selfadjoint(const UnityRoot& root, const std::vector<std::array<cplx, 3>>& free,
                             int epsilon);

// Self-adjoint subvariety: constructed from moduli, free a-phases and one sign
// tuple; satisfies prod alpha*/alpha = 1, b/b* = a/a*, and the cyclic phase chain.
struct SadjSubvarietyInput {
  std::vector<double> mod_alpha, mod_a, mod_b;
  std::vector<double> phase_alpha;  // N-1 free phases; the last is derived
  std::vector<int> sign_ab;         // +-1 per site: phase(b) = sign * phase(a)... realized as b vs a
  double phase_b1 = 0.3;
  int epsilon = 1;
};
ModelParams make_sadj_subvariety(const UnityRoot& root, const SadjSubvarietyInput& in);
double sadj_subvariety_residual(const ModelParams& p);  // max violation of the three constraints

struct LaxBlocks {
  Mat a11, a12, a21, a22;
};

LaxBlocks lax(const CyclicSpace& sp, const ModelParams& p, int n, cplx lambda);

struct Monodromy {
  Mat A, B, C, D;
};

// Ordered product L_hi ... L_lo in the auxiliary space.
Monodromy monodromy(const CyclicSpace& sp, const ModelParams& p, cplx lambda, int lo, int hi);
inline Monodromy monodromy(const CyclicSpace& sp, const ModelParams& p, cplx lambda) {
  return monodromy(sp, p, lambda, 1, p.N());
}

// Monodromy with operator-valued Laurent coefficients (exponents -N..N).
struct MonodromyPoly {
  int deg = 0;  // number of sites
  std::vector<Mat> A, B, C, D;  // index e + deg

  const Mat& coeff(char tag, int e) const;
  Mat eval(char tag, cplx lambda) const;
};
MonodromyPoly monodromy_poly(const CyclicSpace& sp, const ModelParams& p, int lo, int hi);

Mat transfer(const CyclicSpace& sp, const ModelParams& p, cplx lambda);

// six-vertex R-matrix, basis (11,12,21,22) of aux (x) aux
Eigen::Matrix4cd r_matrix(const UnityRoot& root, cplx lambda);

// ||R (M(l) ox 1)(1 ox M(m)) - (1 ox M(m))(M(l) ox 1) R|| / (product of operand norms)
double yang_baxter_residual(const CyclicSpace& sp, const ModelParams& p, cplx lambda, cplx mu);

cplx qdet_scalar_site(const ModelParams& p, int n, cplx lambda);  // det_q L_n, closed form
cplx qdet_scalar(const ModelParams& p, cplx lambda);
Mat qdet_operator(const CyclicSpace& sp, const ModelParams& p, cplx lambda);

// ||M(lambda)^dagger (entrywise) - sigma M(conj lambda) sigma|| / scale, per the
// Hermitian conjugation relation of self-adjoint representations.
double hermiticity_residual(const CyclicSpace& sp, const ModelParams& p, cplx lambda, int epsilon);

// closed-form quantum determinant for self-adjoint representations (modulus-only form)
cplx qdet_scalar_selfadjoint(const ModelParams& p, cplx lambda, int epsilon);

}  // namespace tau2
