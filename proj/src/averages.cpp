#include "tau2/averages.hpp"

namespace tau2 {

AverageMatrix average_lax(const ModelParams& p, int n) {
  const auto& s = p.sites[static_cast<size_t>(n - 1)];
  const int pp = p.root.p;
  const cplx qp2 = p.root.q_half_pow(pp);  // q^{p/2}
  auto powp = [&](cplx z) { return std::pow(z, pp); };
  AverageMatrix L;
  L.A = LaurentPoly::monomial(powp(s.alpha), 1) + LaurentPoly::monomial(-powp(s.beta), -1);
  L.B = LaurentPoly::constant(qp2 * (powp(s.a) + powp(s.b)));
  L.C = LaurentPoly::constant(qp2 * (powp(s.c) + powp(s.d)));
  L.D = LaurentPoly::monomial(powp(s.gamma), -1) + LaurentPoly::monomial(-powp(s.delta), 1);
  return L;
}

AverageMatrix average_monodromy(const ModelParams& p, int lo, int hi) {
  AverageMatrix m = average_lax(p, hi);
  for (int n = hi - 1; n >= lo; --n) {
    const AverageMatrix L = average_lax(p, n);
    AverageMatrix out;
    out.A = m.A * L.A + m.B * L.C;
    out.B = m.A * L.B + m.B * L.D;
    out.C = m.C * L.A + m.D * L.C;
    out.D = m.C * L.B + m.D * L.D;
    m = out;
  }
  return m;
}

cplx operator_average(const CyclicSpace& sp, const ModelParams& p, char tag, cplx Lambda,
                      double* centrality_dev, double tol) {
  if (Lambda == cplx(0, 0)) throw std::domain_error("operator_average: Lambda = 0");
  const cplx lambda = principal_root(Lambda, p.root.p);
  Mat acc = Mat::Identity(sp.dim(), sp.dim());
  for (int k = 1; k <= p.root.p; ++k) {
    const auto m = monodromy(sp, p, p.root.q_pow(k) * lambda);
    const Mat& block = (tag == 'A') ? m.A : (tag == 'B') ? m.B : (tag == 'C') ? m.C : m.D;
    acc = acc * block;
  }
  const cplx scalar = acc.trace() / static_cast<double>(sp.dim());
  const Mat dev = acc - scalar * Mat::Identity(sp.dim(), sp.dim());
  const double rel = dev.norm() / std::max(acc.norm(), 1e-300);
  if (centrality_dev) *centrality_dev = rel;
  if (rel > tol)
    throw std::runtime_error("operator_average: centrality violated (rel dev " +
                             std::to_string(rel) + ")");
  return scalar;
}

LaurentPoly qdet_average(const ModelParams& p) {
  const int pp = p.root.p;
  LaurentPoly out = LaurentPoly::constant(cplx(1, 0));
  for (int n = 1; n <= p.N(); ++n) {
    const cplx kp = std::pow(p.k_n(n), pp);
    const cplx Mp = std::pow(p.mu_plus(n), pp);
    const cplx Mm = std::pow(p.mu_minus(n), pp);
    const LaurentPoly f1 = LaurentPoly::monomial(1.0 / Mp, 1) + LaurentPoly::monomial(-Mp, -1);
    const LaurentPoly f2 = LaurentPoly::monomial(1.0 / Mm, 1) + LaurentPoly::monomial(-Mm, -1);
    out = out * f1 * f2 * kp;
  }
  return out;
}

std::pair<cplx, cplx> omega_eigenvalues(const AverageMatrix& m, cplx Lambda) {
  if (Lambda == cplx(0, 0)) throw std::domain_error("omega_eigenvalues: Lambda = 0");
  const cplx A = m.A.eval(Lambda), B = m.B.eval(Lambda), C = m.C.eval(Lambda), D = m.D.eval(Lambda);
  const cplx tr = A + D;
  const cplx disc = std::sqrt((A - D) * (A - D) + 4.0 * B * C);
  cplx w1 = (tr + disc) / 2.0, w2 = (tr - disc) / 2.0;
  const bool swap = (std::abs(w2) > std::abs(w1) + 1e-14 * std::abs(w1)) ||
                    (std::abs(std::abs(w2) - std::abs(w1)) <=
                         1e-14 * std::max(std::abs(w1), std::abs(w2)) &&
                     std::arg(w2) > std::arg(w1));
  if (swap) std::swap(w1, w2);
  return {w1, w2};
}

}  // namespace tau2
