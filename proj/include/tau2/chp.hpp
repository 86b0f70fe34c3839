#pragma once

#include "tau2/spectrum.hpp"

namespace tau2 {

// A point of the chiral Potts curve C_k (or of C^3 when off-curve work is fine).
struct CurvePoint {
  cplx a, b, c, d;
  cplx x() const { return a / d; }
  cplx y() const { return b / c; }
  cplx s() const { return d / c; }
  cplx t() const { return x() * y(); }
};

// residuals of the three curve equations at modulus k (k' = principal sqrt)
std::array<double, 3> curve_residual(const CurvePoint& pt, cplx k, cplx kprime, int p);

// solve the curve for the remaining coordinates given (a, d)
CurvePoint curve_solve(const UnityRoot& root, cplx k, cplx a, cplx d);

// self-adjoint curve point (a, eps q eps0 conj(a), eps0 conj(d), d) built from
// the modulus of a, the phase of x and the sign eps0; k must satisfy
// conj(k) = eps k. Throws when the phase is infeasible for the given k.
CurvePoint curve_point_selfadjoint(const UnityRoot& root, cplx k, int epsilon, int eps0,
                                   double mod_a, cplx phase_x);

// the distinguished p point with conj(x) = eps x / q, conj(y) = eps q y,
// s real, and prescribed t = x y
CurvePoint curve_point_p_selfadjoint(const UnityRoot& root, cplx k, int epsilon, cplx t_p);

// generic p point with prescribed t = x y (principal branches)
CurvePoint curve_point_p(const UnityRoot& root, cplx k, cplx t_p);

struct ChPConfig {
  UnityRoot root;
  cplx k;
  cplx c0{1.0, 0.0};
  int epsilon = 1;           // used by the self-adjoint families
  std::vector<CurvePoint> q_points;
  std::vector<CurvePoint> r_points;  // equal to q_points in the commuting family
  int N() const { return static_cast<int>(q_points.size()); }
  bool commuting() const;
};

// tau_2 representation parameters from the curve parametrization
ModelParams tau2_params_from_curve(const ChPConfig& cfg);

// cyclic W-function tables W[m] = W_qp(z(m))/W_qp(z(0)), z(m) = q^{-2m}
struct WTables {
  std::vector<cplx> W, Wbar;
  double cyclicity = 0;  // |W(z(p))/W(z(0)) - 1| and the bar analogue
};
WTables w_pair(const UnityRoot& root, const CurvePoint& q, const CurvePoint& p,
               bool demand_cyclic = true);

// the p point associated with the spectral parameter lambda (t_p = (c0/lambda)^2)
CurvePoint p_point_for_lambda(const ChPConfig& cfg, cplx lambda, bool selfadjoint_branch = false);

// curve automorphism (a,b,c,d) -> (q^j a, q^j b, c, d); maps t -> q^{2j} t and
// realizes the spectral shift lambda -> lambda / q^j within one coherent family
CurvePoint xi_shift(const UnityRoot& root, const CurvePoint& pt, int j);

enum class ChPKind { T, That };

// dense transfer-matrix kernel built from an explicit p point
Mat chp_transfer_at(const CyclicSpace& sp, const ChPConfig& cfg, const CurvePoint& P, ChPKind kind);

// dense transfer-matrix kernel at spectral parameter lambda
Mat chp_transfer(const CyclicSpace& sp, const ChPConfig& cfg, cplx lambda, ChPKind kind,
                 bool selfadjoint_branch = false);

// Bazhanov-Stroganov coefficients of the Baxter equation for T^chP
std::pair<cplx, cplx> bs_coefficients(const ChPConfig& cfg, const ModelParams& params,
                                      cplx lambda, bool selfadjoint_branch = false);

struct NormalityReport {
  double dagger_vs_that = 0;  // ||T^dag - g That|| / ||T||
  double normality = 0;       // ||T^dag T - T T^dag|| / ||T||^2
  double g_modulus = 0;       // |g| of the fitted factor
};
NormalityReport normality_check(const CyclicSpace& sp, const ChPConfig& cfg, cplx lambda);

// self-adjoint commuting configuration (q_n = r_n on the restricted points)
ChPConfig chp_selfadjoint_config(const UnityRoot& root, cplx k, int epsilon,
                                 const std::vector<double>& mod_a,
                                 const std::vector<int>& eps0,
                                 const std::vector<double>& phase_x);

struct RbarInput {
  cplx k;  // eps-real modulus
  int epsilon = 1;
  std::vector<double> mod_a;       // N moduli
  std::vector<int> eps1, eps2;     // sign tuples
  double phase_a1 = 0.0;           // phase of a_{q_1} (N even); for N odd it is derived
  int sign_phase = 1;              // the +- in the phase condition for N odd
};

// the restricted family on which Bethe completeness holds
ChPConfig rbar_subvariety(const UnityRoot& root, const RbarInput& in);

// ratio prod a / prod d of the subvariety Baxter coefficient averages,
// compared against the closed modulus form
struct AverageRatioReport {
  cplx ratio;
  double vs_modulus_form = 0;
  double margin_from_one = 0;
};
AverageRatioReport rbar_average_ratio(const ChPConfig& cfg, const ModelParams& params,
                                      const FunctionalCoeffs& fc, cplx Lambda);

}  // namespace tau2
