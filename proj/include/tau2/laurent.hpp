#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tau2/types.hpp"

namespace tau2 {

enum class Parity { Even, Odd, None };

// Complex Laurent polynomial with a dense coefficient window [lo, lo+n).
class LaurentPoly {
 public:
  LaurentPoly() = default;
  LaurentPoly(int lo, std::vector<cplx> coeffs) : lo_(lo), c_(std::move(coeffs)) { trim(); }

  static LaurentPoly zero() { return LaurentPoly(); }
  static LaurentPoly constant(cplx v) { return monomial(v, 0); }
  static LaurentPoly monomial(cplx v, int e) { return LaurentPoly(e, {v}); }

  bool is_zero() const { return c_.empty(); }
  int min_exp() const { return lo_; }
  int max_exp() const { return lo_ + static_cast<int>(c_.size()) - 1; }
  // maximal |exponent| of the support
  int degree() const {
    if (is_zero()) return 0;
    return std::max(std::abs(min_exp()), std::abs(max_exp()));
  }

  cplx coeff(int e) const {
    if (is_zero() || e < lo_ || e > max_exp()) return cplx(0, 0);
    return c_[static_cast<size_t>(e - lo_)];
  }
  void set_coeff(int e, cplx v);

  double max_abs_coeff() const {
    double m = 0;
    for (const auto& x : c_) m = std::max(m, std::abs(x));
    return m;
  }

  // drop coefficients below rel_tol * max|coeff|
  LaurentPoly& prune(double rel_tol = 1e-12);

  cplx eval(cplx z) const;  // Horner split over positive/negative exponents

  LaurentPoly operator+(const LaurentPoly& o) const;
  LaurentPoly operator-(const LaurentPoly& o) const;
  LaurentPoly operator*(const LaurentPoly& o) const;
  LaurentPoly operator*(cplx s) const;
  LaurentPoly operator-() const { return (*this) * cplx(-1, 0); }

  // f(s*lambda)
  LaurentPoly scale_arg(cplx s) const;

  // measured parity: Even/Odd when the cross-parity coefficient mass is below tol (relative)
  Parity measured_parity(double tol = 1e-9) const;
  // keep only coefficients of exponents == parity(mod 2); returns removed relative mass
  double project_parity(Parity par);

  std::string str() const;

 private:
  void trim();
  int lo_ = 0;
  std::vector<cplx> c_;
};

struct InterpolationResult {
  LaurentPoly poly;
  double max_residual = 0;      // max |fit - sample| over samples, relative to sample scale
  double parity_leakage = 0;    // relative mass removed by the parity projection
  double condition_estimate = 1;
};

// Least-squares fit of a Laurent polynomial of the given degree bound (and
// optional fixed parity) through the samples. Throws on rank deficiency.
InterpolationResult laurent_interpolate(const std::vector<std::pair<cplx, cplx>>& samples,
                                        int degree, Parity parity);

// Geometric interpolation grid rho * exp(2*pi*i*j/M), j = 0..M-1.
std::vector<cplx> geometric_grid(int M, double rho = 1.17);

// All nonzero roots (with multiplicity) of the polynomial part z^{-min_exp} f(z),
// via companion-matrix eigenvalues plus a few Newton steps.
std::vector<cplx> poly_roots(const LaurentPoly& f);

struct RootSetReport {
  bool p_string_free = true;
  bool epsilon_self_adjoint = true;
  double worst_string_gap = 0;       // smallest max-deviation over candidate p-strings
  double conjugation_residual = 0;   // matching residual of the lambda -> eps*conj(lambda) map
};

// Checks a root multiset for (i) absence of full p-strings {l0, q l0, ..., q^{2l} l0}
// and (ii) invariance under lambda -> epsilon * conj(lambda).
RootSetReport root_set_checks(const std::vector<cplx>& roots, const UnityRoot& root, int epsilon,
                              double tol = 1e-6);

}  // namespace tau2
