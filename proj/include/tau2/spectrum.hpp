#pragma once

#include <map>
#include <string>

#include "tau2/sov.hpp"

namespace tau2 {

// One joint (tau_2, Theta) eigen-datum.
struct SpectralLine {
  int k = 0;                     // Theta sector, eigenvalue q^k
  LaurentPoly t;                 // degree N, parity of N
  Vec right;                     // eigenvector
  Vec left;                      // left eigenvector (stored as a column)
  std::vector<cplx> Q;           // polynomial Q coefficients (degree <= 2 l N), when built
  std::vector<cplx> bethe_roots;
  int a_t = 0, b_t = 0;
  std::map<std::string, double> residuals;
};

// Coefficient pair for the functional-matrix machinery; satisfies
// det_q M(lambda) = a(lambda) d(lambda/q), and trace_avg = calA + calD in Lambda.
struct FunctionalCoeffs {
  LaurentPoly a, d;
  LaurentPoly trace_avg;
};

FunctionalCoeffs functional_coeffs_general(const ModelParams& p);
// the subvariety pair (polynomial in lambda); requires the constraints of the
// self-adjoint subvariety
FunctionalCoeffs functional_coeffs_subvariety(const ModelParams& p, int epsilon);

// joint (tau_2, Theta) spectrum with eigenvalue functions from Rayleigh quotients
std::vector<SpectralLine> joint_diagonalize(const CyclicSpace& sp, const ModelParams& p,
                                            unsigned attempt = 0);

// interpolated det_p D(Lambda) via the four-term expansion with tridiagonal minors
LaurentPoly det_functional(const FunctionalCoeffs& fc, const LaurentPoly& t, const UnityRoot& root,
                           int N);
// max interpolated coefficient relative to the trace_avg coefficient scale
double det_functional_residual(const FunctionalCoeffs& fc, const LaurentPoly& t,
                               const UnityRoot& root, int N);

// oracle: direct p x p determinant plus winding correction (tests / cross-check)
cplx det_functional_direct(const FunctionalCoeffs& fc, const LaurentPoly& t, const UnityRoot& root,
                           cplx Lambda);

struct NullspaceDiag {
  double sigma_ratio = 0;  // smallest singular value / largest
  double gap = 0;          // second smallest / smallest
  double baxter_residual = 0;
};

// polynomial Q from the nullspace of the Baxter residual map
std::vector<cplx> q_from_nullspace(const LaurentPoly& t, const FunctionalCoeffs& fc,
                                   const UnityRoot& root, int N, NullspaceDiag* diag = nullptr);

struct CofactorReport {
  double parity_leakage = 0;    // odd part of C_{1,1}
  double shift_identity = 0;    // C_{1,2l+1}(l) = q^N C_{1,2}(-l/q)
  double index_identity = 0;    // C_{h+i,k+i}(l) = C_{h,k}(l q^i), sampled
  double square_identity = 0;   // C11(lq) C11(l) = q^N C12(l) C12(-l)
  double zero_set_mismatch = 0; // matched-root sets of C11&C12 vs C11&C1,2l+1
  double vs_nullspace = 0;      // coefficient deviation against the nullspace Q
  bool fallback = false;        // root matching was ambiguous
};

std::vector<cplx> q_from_cofactor(const LaurentPoly& t, const FunctionalCoeffs& fc,
                                  const UnityRoot& root, int N, const std::vector<cplx>& q_null,
                                  CofactorReport* rep = nullptr);

struct BetheReport {
  double max_residual = 0;        // Bethe equation residual over the roots
  double reconstruction = 0;      // t rebuilt from Q vs input t (coefficientwise)
  bool p_string_free = true;
  bool epsilon_self_adjoint = true;
  bool pole_collision = false;    // a Q-root hit a zero of the d-coefficient
};

BetheReport bethe_check(const std::vector<cplx>& Q, const FunctionalCoeffs& fc,
                        const LaurentPoly& t, int a_t, const UnityRoot& root, int epsilon);

std::vector<cplx> q_polynomial_roots(const std::vector<cplx>& Q);
cplx q_eval(const std::vector<cplx>& Q, cplx lambda);

struct WavefunctionReport {
  double factorization = 0;  // vs eta_N^{-k} prod Q(eta_r), up to one scalar
  double sov_system = 0;     // discrete Baxter-like system on the grid
  double theta_shift = 0;    // Psi(q^{delta_N} eta) = q^{-k} Psi(eta)
};

// Q-values on each separate-variable orbit: from the polynomial (converted to
// the basis gauge through the coefficient-ratio chain) if given, otherwise
// from the one-variable discrete system.
WavefunctionReport wavefunction_check(const CyclicSpace& sp, const ModelParams& p,
                                      const SOVBasis& basis, const SpectralLine& line,
                                      const FunctionalCoeffs* qfc = nullptr);

struct CertifyReport {
  int lines = 0;
  double worst_det_residual = 0;
  double worst_parity_leakage = 0;
  double worst_asymptotics = 0;     // sector asymptotics of t
  double min_pair_distance = 0;     // joint simplicity margin
  double worst_wavefunction = 0;
  double worst_sov_system = 0;
};

CertifyReport certify_spectrum(const CyclicSpace& sp, const ModelParams& p,
                               std::vector<SpectralLine>& lines, const SOVBasis* basis = nullptr,
                               const FunctionalCoeffs* qfc = nullptr);

struct QOperatorReport {
  double qq_commutator = 0;
  double tq_commutator = 0;
  double baxter_operator = 0;
  double self_adjointness = 0;  // Q(l)^dag vs Q(eps conj l)
};

QOperatorReport q_operator_checks(const CyclicSpace& sp, const ModelParams& p,
                                  const std::vector<SpectralLine>& lines,
                                  const FunctionalCoeffs& fc, int epsilon);

}  // namespace tau2
