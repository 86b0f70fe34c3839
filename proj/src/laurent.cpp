#include "tau2/laurent.hpp"

#include <algorithm>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace tau2 {

void LaurentPoly::trim() {
  auto nz = [](cplx v) { return v != cplx(0, 0); };
  size_t a = 0, b = c_.size();
  while (a < b && !nz(c_[a])) ++a;
  while (b > a && !nz(c_[b - 1])) --b;
  if (a == b) {
    c_.clear();
    lo_ = 0;
    return;
  }
  if (a > 0 || b < c_.size()) {
    c_ = std::vector<cplx>(c_.begin() + a, c_.begin() + b);
    lo_ += static_cast<int>(a);
  }
}

void LaurentPoly::set_coeff(int e, cplx v) {
  if (is_zero()) {
    if (v == cplx(0, 0)) return;
    lo_ = e;
    c_ = {v};
    return;
  }
  if (e < lo_) {
    c_.insert(c_.begin(), static_cast<size_t>(lo_ - e), cplx(0, 0));
    lo_ = e;
  } else if (e > max_exp()) {
    c_.resize(static_cast<size_t>(e - lo_ + 1), cplx(0, 0));
  }
  c_[static_cast<size_t>(e - lo_)] = v;
  trim();
}

LaurentPoly& LaurentPoly::prune(double rel_tol) {
  const double cut = rel_tol * max_abs_coeff();
  for (auto& v : c_)
    if (std::abs(v) < cut) v = cplx(0, 0);
  trim();
  return *this;
}

cplx LaurentPoly::eval(cplx z) const {
  if (z == cplx(0, 0)) throw std::domain_error("LaurentPoly::eval at z = 0");
  if (is_zero()) return cplx(0, 0);
  // Horner on the non-negative part, Horner in 1/z on the negative part.
  cplx pos(0, 0), neg(0, 0);
  const int hi = max_exp();
  if (hi >= 0) {
    for (int e = hi; e >= 0; --e) pos = pos * z + coeff(e);
  }
  if (lo_ < 0) {
    const cplx w = cplx(1, 0) / z;
    for (int e = lo_; e <= std::min(hi, -1); ++e) neg = neg * w + coeff(e);
    neg *= w;  // lowest power collected last: neg = sum_{e<0} c_e z^e
  }
  return pos + neg;
}

LaurentPoly LaurentPoly::operator+(const LaurentPoly& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  const int lo = std::min(lo_, o.lo_);
  const int hi = std::max(max_exp(), o.max_exp());
  std::vector<cplx> out(static_cast<size_t>(hi - lo + 1), cplx(0, 0));
  for (int e = lo; e <= hi; ++e) out[static_cast<size_t>(e - lo)] = coeff(e) + o.coeff(e);
  return LaurentPoly(lo, std::move(out));
}

LaurentPoly LaurentPoly::operator-(const LaurentPoly& o) const { return *this + (o * cplx(-1, 0)); }

LaurentPoly LaurentPoly::operator*(const LaurentPoly& o) const {
  if (is_zero() || o.is_zero()) return zero();
  const int lo = lo_ + o.lo_;
  std::vector<cplx> out(c_.size() + o.c_.size() - 1, cplx(0, 0));
  for (size_t i = 0; i < c_.size(); ++i)
    for (size_t j = 0; j < o.c_.size(); ++j) out[i + j] += c_[i] * o.c_[j];
  return LaurentPoly(lo, std::move(out));
}

LaurentPoly LaurentPoly::operator*(cplx s) const {
  if (s == cplx(0, 0)) return zero();
  auto out = c_;
  for (auto& v : out) v *= s;
  return LaurentPoly(lo_, std::move(out));
}

LaurentPoly LaurentPoly::scale_arg(cplx s) const {
  auto out = c_;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= std::pow(s, lo_ + static_cast<int>(i));
  return LaurentPoly(lo_, std::move(out));
}

Parity LaurentPoly::measured_parity(double tol) const {
  if (is_zero()) return Parity::Even;
  double even_mass = 0, odd_mass = 0;
  for (int e = min_exp(); e <= max_exp(); ++e) {
    const double a = std::abs(coeff(e));
    if (((e % 2) + 2) % 2 == 0)
      even_mass = std::max(even_mass, a);
    else
      odd_mass = std::max(odd_mass, a);
  }
  const double m = std::max(even_mass, odd_mass);
  if (odd_mass <= tol * m) return Parity::Even;
  if (even_mass <= tol * m) return Parity::Odd;
  return Parity::None;
}

double LaurentPoly::project_parity(Parity par) {
  if (par == Parity::None || is_zero()) return 0;
  const int want = (par == Parity::Even) ? 0 : 1;
  double removed = 0;
  const double scale = max_abs_coeff();
  for (int e = min_exp(); e <= max_exp(); ++e) {
    if (((e % 2) + 2) % 2 != want) {
      removed = std::max(removed, std::abs(coeff(e)));
      set_coeff(e, cplx(0, 0));
    }
  }
  return scale > 0 ? removed / scale : 0;
}

std::string LaurentPoly::str() const {
  std::ostringstream os;
  if (is_zero()) return "0";
  bool first = true;
  for (int e = min_exp(); e <= max_exp(); ++e) {
    const cplx v = coeff(e);
    if (v == cplx(0, 0)) continue;
    if (!first) os << " + ";
    os << "(" << v.real() << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "i)";
    if (e != 0) os << "*x^" << e;
    first = false;
  }
  return os.str();
}

std::vector<cplx> geometric_grid(int M, double rho) {
  std::vector<cplx> g(static_cast<size_t>(M));
  for (int j = 0; j < M; ++j) g[static_cast<size_t>(j)] = std::polar(rho, 2.0 * M_PI * j / M);
  return g;
}

InterpolationResult laurent_interpolate(const std::vector<std::pair<cplx, cplx>>& samples,
                                        int degree, Parity parity) {
  if (degree < 0) throw std::invalid_argument("laurent_interpolate: negative degree");
  std::vector<int> exps;
  for (int e = -degree; e <= degree; ++e) {
    if (parity == Parity::Even && (((e % 2) + 2) % 2) != 0) continue;
    if (parity == Parity::Odd && (((e % 2) + 2) % 2) != 1) continue;
    exps.push_back(e);
  }
  const size_t m = samples.size(), n = exps.size();
  if (m < n) throw std::invalid_argument("laurent_interpolate: fewer samples than coefficients");
  for (const auto& s : samples)
    if (s.first == cplx(0, 0)) throw std::invalid_argument("laurent_interpolate: zero sample point");

  Mat V(m, n);
  Vec rhs(m);
  for (size_t i = 0; i < m; ++i) {
    rhs(static_cast<Eigen::Index>(i)) = samples[i].second;
    for (size_t j = 0; j < n; ++j)
      V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::pow(samples[i].first, exps[j]);
  }
  Eigen::JacobiSVD<Mat> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double cond = (smin > 0) ? smax / smin : std::numeric_limits<double>::infinity();
  if (smin <= 1e-13 * smax) {
    throw std::runtime_error("laurent_interpolate: rank-deficient sample set (cond ~ " +
                             std::to_string(cond) + ")");
  }
  Vec x = svd.solve(rhs);

  LaurentPoly f;
  for (size_t j = 0; j < n; ++j) f.set_coeff(exps[j], x(static_cast<Eigen::Index>(j)));

  InterpolationResult res;
  res.condition_estimate = cond;
  double scale = 0;
  for (const auto& s : samples) scale = std::max(scale, std::abs(s.second));
  double worst = 0;
  for (const auto& s : samples) worst = std::max(worst, std::abs(f.eval(s.first) - s.second));
  res.max_residual = scale > 0 ? worst / scale : worst;
  res.parity_leakage = 0;  // parity already enforced through the basis
  res.poly = std::move(f);
  return res;
}

std::vector<cplx> poly_roots(const LaurentPoly& f) {
  if (f.is_zero()) throw std::invalid_argument("poly_roots: zero polynomial");
  // polynomial part of z^{-min_exp} f: coefficients a_0..a_d with a_d != 0
  const int lo = f.min_exp(), hi = f.max_exp();
  const int d = hi - lo;
  if (d == 0) return {};  // monomial
  std::vector<cplx> a(static_cast<size_t>(d + 1));
  for (int e = lo; e <= hi; ++e) a[static_cast<size_t>(e - lo)] = f.coeff(e);

  Mat C = Mat::Zero(d, d);
  for (int i = 1; i < d; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) C(i, d - 1) = -a[static_cast<size_t>(i)] / a[static_cast<size_t>(d)];
  Eigen::ComplexEigenSolver<Mat> es(C, false);
  std::vector<cplx> roots(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) roots[static_cast<size_t>(i)] = es.eigenvalues()(i);

  // Newton polish on p(z) = sum a_k z^k
  auto p = [&](cplx z) {
    cplx v(0, 0);
    for (int k = d; k >= 0; --k) v = v * z + a[static_cast<size_t>(k)];
    return v;
  };
  auto dp = [&](cplx z) {
    cplx v(0, 0);
    for (int k = d; k >= 1; --k) v = v * z + a[static_cast<size_t>(k)] * static_cast<double>(k);
    return v;
  };
  for (auto& r : roots) {
    for (int it = 0; it < 8; ++it) {
      const cplx den = dp(r);
      if (std::abs(den) < 1e-300) break;
      const cplx step = p(r) / den;
      r -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(r))) break;
    }
  }
  // deterministic order
  std::sort(roots.begin(), roots.end(), [](cplx x, cplx y) {
    if (std::abs(std::abs(x) - std::abs(y)) > 1e-14 * std::max(std::abs(x), std::abs(y)))
      return std::abs(x) < std::abs(y);
    return std::arg(x) < std::arg(y);
  });
  return roots;
}

RootSetReport root_set_checks(const std::vector<cplx>& roots, const UnityRoot& root, int epsilon,
                              double tol) {
  RootSetReport rep;
  const auto match_dist = [&](cplx x, cplx y) {
    return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1.0});
  };

  // (i) p-string freedom: no root lambda0 such that the whole orbit
  // {q^j lambda0} is present in the multiset.
  rep.worst_string_gap = std::numeric_limits<double>::infinity();
  for (const auto& base : roots) {
    double worst = 0;  // max over orbit members of the distance to the closest root
    for (int j = 0; j < root.p; ++j) {
      const cplx target = base * root.q_pow(j);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : roots) best = std::min(best, match_dist(r, target));
      worst = std::max(worst, best);
    }
    rep.worst_string_gap = std::min(rep.worst_string_gap, worst);
    if (worst < tol) rep.p_string_free = false;
  }
  if (roots.empty()) rep.worst_string_gap = 0;

  // (ii) invariance under lambda -> eps*conj(lambda), as a greedy matching
  std::vector<bool> used(roots.size(), false);
  double worst = 0;
  for (const auto& r : roots) {
    const cplx target = static_cast<double>(epsilon) * std::conj(r);
    double best = std::numeric_limits<double>::infinity();
    size_t arg = roots.size();
    for (size_t j = 0; j < roots.size(); ++j) {
      if (used[j]) continue;
      const double dd = match_dist(roots[j], target);
      if (dd < best) {
        best = dd;
        arg = j;
      }
    }
    if (arg < roots.size()) used[arg] = true;
    worst = std::max(worst, best);
  }
  rep.conjugation_residual = roots.empty() ? 0 : worst;
  rep.epsilon_self_adjoint = rep.conjugation_residual < tol;
  return rep;
}

}  // namespace tau2
