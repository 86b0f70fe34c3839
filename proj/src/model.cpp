#include "tau2/model.hpp"

#include <random>

namespace tau2 {

double SiteParams::constraint_residual() const {
  const double r1 = rel_err(alpha * gamma, a * c);
  const double r2 = rel_err(beta * delta, b * d);
  return std::max(r1, r2);
}

ModelParams ModelParams::subchain(int lo, int hi) const {
  if (lo < 1 || hi > N() || lo > hi) throw std::invalid_argument("subchain: bad range");
  ModelParams out;
  out.root = root;
  out.sites.assign(sites.begin() + (lo - 1), sites.begin() + hi);
  return out;
}

cplx ModelParams::a_plus(int lo, int hi) const {
  cplx v(1, 0);
  for (int n = lo; n <= hi; ++n) v *= sites[static_cast<size_t>(n - 1)].alpha;
  return v;
}
cplx ModelParams::a_minus(int lo, int hi) const {
  cplx v(1, 0);
  for (int n = lo; n <= hi; ++n) v *= -sites[static_cast<size_t>(n - 1)].beta;
  return v;
}
cplx ModelParams::d_plus(int lo, int hi) const {
  cplx v(1, 0);
  for (int n = lo; n <= hi; ++n) v *= -sites[static_cast<size_t>(n - 1)].delta;
  return v;
}
cplx ModelParams::d_minus(int lo, int hi) const {
  cplx v(1, 0);
  for (int n = lo; n <= hi; ++n) v *= sites[static_cast<size_t>(n - 1)].gamma;
  return v;
}

cplx ModelParams::k_n(int n) const {
  // branch paired with mu_{n,+-} so that the factorized local quantum
  // determinant reproduces the expanded one exactly; k_n^2 = abcd still holds
  const auto& s = sites[static_cast<size_t>(n - 1)];
  return -s.alpha * s.delta * mu_plus(n) * mu_minus(n) / root.q;
}
cplx ModelParams::mu_plus(int n) const {
  const auto& s = sites[static_cast<size_t>(n - 1)];
  return I * root.q_half * std::sqrt(s.a * s.beta / (s.alpha * s.b));
}
cplx ModelParams::mu_minus(int n) const {
  const auto& s = sites[static_cast<size_t>(n - 1)];
  return I * root.q_half * std::sqrt(s.c * s.beta / (s.alpha * s.d));
}

ModelParams sample_params(const UnityRoot& root, int N, std::uint64_t seed, double mod_min,
                          double mod_max) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mod(mod_min, mod_max);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
  auto draw = [&]() { return std::polar(mod(rng), ph(rng)); };

  ModelParams p;
  p.root = root;
  p.sites.resize(static_cast<size_t>(N));
  for (auto& s : p.sites) {
    s.alpha = draw();
    s.beta = draw();
    s.a = draw();
    s.b = draw();
    s.c = draw();
    s.d = draw();
    s.gamma = s.a * s.c / s.alpha;  // exact constraints
    s.delta = s.b * s.d / s.beta;
  }
  return p;
}

ModelParams make_selfadjoint(const UnityRoot& root, const std::vector<std::array<cplx, 3>>& free,
                             int epsilon) {
  if (epsilon != 1 && epsilon != -1) throw std::invalid_argument("epsilon must be +-1");
  ModelParams p;
  p.root = root;
  p.sites.resize(free.size());
  const double eps = epsilon;
  for (size_t n = 0; n < free.size(); ++n) {
    auto& s = p.sites[n];
    s.alpha = free[n][0];
    s.a = free[n][1];
    s.b = free[n][2];
    if (s.alpha == cplx(0, 0) || s.a == cplx(0, 0) || s.b == cplx(0, 0))
      throw std::invalid_argument("make_selfadjoint: zero free parameter");
    s.c = -eps * std::conj(s.b);
    s.d = -eps * std::conj(s.a);
    s.beta = eps * std::conj(s.a) * s.b / std::conj(s.alpha);
    s.gamma = s.a * s.c / s.alpha;
    s.delta = s.b * s.d / s.beta;
  }
  return p;
}

ModelParams make_sadj_subvariety(const UnityRoot& root, const SadjSubvarietyInput& in) {
  const size_t N = in.mod_alpha.size();
  if (N == 0 || in.mod_a.size() != N || in.mod_b.size() != N || in.sign_ab.size() != N ||
      in.phase_alpha.size() != N - 1)
    throw std::invalid_argument("make_sadj_subvariety: inconsistent input sizes");

  // phases with prod phase(alpha_n) = 1 exactly: the weaker condition
  // (prod phase)^2 = 1 admits a sign component on which the modulus-only
  // Baxter coefficient pair fails, so the last phase is derived without a root.
  std::vector<cplx> phi_alpha(N);
  cplx prod(1, 0);
  for (size_t n = 0; n + 1 < N; ++n) {
    phi_alpha[n] = std::polar(1.0, in.phase_alpha[n]);
    prod *= phi_alpha[n];
  }
  phi_alpha[N - 1] = cplx(1, 0) / prod;

  // chain v_{n+1} = v_n u_{n+1} u_n for v_n = phase(b_n)^2 (cyclically consistent
  // because prod u_n^2 = 1)
  std::vector<cplx> vb(N);
  vb[0] = std::polar(1.0, 2.0 * in.phase_b1);
  for (size_t n = 0; n + 1 < N; ++n) {
    const cplx u_n = phi_alpha[n] * phi_alpha[n];
    const cplx u_n1 = phi_alpha[n + 1] * phi_alpha[n + 1];
    vb[n + 1] = vb[n] * u_n1 * u_n;
  }

  std::vector<std::array<cplx, 3>> free(N);
  for (size_t n = 0; n < N; ++n) {
    const cplx phi_b = std::sqrt(vb[n]);
    const cplx phi_a = static_cast<double>(in.sign_ab[n]) * phi_b;
    free[n] = {in.mod_alpha[n] * phi_alpha[n], in.mod_a[n] * phi_a, in.mod_b[n] * phi_b};
  }
  return make_selfadjoint(root, free, in.epsilon);
}

double sadj_subvariety_residual(const ModelParams& p) {
  double worst = 0;
  cplx prod(1, 0);
  const int N = p.N();
  for (const auto& s : p.sites) prod *= std::conj(s.alpha) / s.alpha;
  worst = std::max(worst, std::abs(prod - cplx(1, 0)));
  for (int n = 0; n < N; ++n) {
    const auto& s = p.sites[static_cast<size_t>(n)];
    worst = std::max(worst, std::abs(s.b / std::conj(s.b) - s.a / std::conj(s.a)));
    const auto& t = p.sites[static_cast<size_t>((n + 1) % N)];
    const cplx lhs = std::conj(t.alpha) * std::conj(s.alpha) / (t.alpha * s.alpha);
    const cplx rhs = std::conj(t.b) * s.b / (t.b * std::conj(s.b));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

LaxBlocks lax(const CyclicSpace& sp, const ModelParams& p, int n, cplx lambda) {
  if (lambda == cplx(0, 0)) throw std::domain_error("lax: lambda = 0");
  const auto& s = p.sites[static_cast<size_t>(n - 1)];
  const cplx qh = p.root.q_half;
  const Mat u = sp.site_u(n), uin = sp.site_u_inv(n);
  const Mat v = sp.site_v(n), vin = sp.site_v_inv(n);
  LaxBlocks L;
  L.a11 = lambda * s.alpha * v - (s.beta / lambda) * vin;
  L.a12 = u * ((s.a / qh) * v + (qh * s.b) * vin);
  L.a21 = uin * ((qh * s.c) * v + (s.d / qh) * vin);
  L.a22 = (s.gamma / lambda) * v - (s.delta * lambda) * vin;
  return L;
}

Monodromy monodromy(const CyclicSpace& sp, const ModelParams& p, cplx lambda, int lo, int hi) {
  Monodromy m;
  LaxBlocks L = lax(sp, p, hi, lambda);
  m.A = L.a11;
  m.B = L.a12;
  m.C = L.a21;
  m.D = L.a22;
  for (int n = hi - 1; n >= lo; --n) {
    L = lax(sp, p, n, lambda);
    const Mat A = m.A * L.a11 + m.B * L.a21;
    const Mat B = m.A * L.a12 + m.B * L.a22;
    const Mat C = m.C * L.a11 + m.D * L.a21;
    const Mat D = m.C * L.a12 + m.D * L.a22;
    m.A = A;
    m.B = B;
    m.C = C;
    m.D = D;
  }
  return m;
}

const Mat& MonodromyPoly::coeff(char tag, int e) const {
  const auto& v = (tag == 'A') ? A : (tag == 'B') ? B : (tag == 'C') ? C : D;
  return v[static_cast<size_t>(e + deg)];
}

Mat MonodromyPoly::eval(char tag, cplx lambda) const {
  const auto& v = (tag == 'A') ? A : (tag == 'B') ? B : (tag == 'C') ? C : D;
  Mat out = Mat::Zero(v[0].rows(), v[0].cols());
  for (int e = -deg; e <= deg; ++e) out += std::pow(lambda, e) * v[static_cast<size_t>(e + deg)];
  return out;
}

namespace {
// one operator-valued Laurent entry: coefficients at exponents -1, 0, +1
struct LaxPolyEntry {
  Mat m1, z, p1;
};
struct BlockPoly {
  int deg;
  std::vector<Mat> c;  // exponent e at index e+deg
};
}  // namespace

MonodromyPoly monodromy_poly(const CyclicSpace& sp, const ModelParams& p, int lo, int hi) {
  const long dim = sp.dim();
  const Mat Z = Mat::Zero(dim, dim);
  auto lax_entries = [&](int n) {
    const auto& s = p.sites[static_cast<size_t>(n - 1)];
    const cplx qh = p.root.q_half;
    const Mat u = sp.site_u(n), uin = sp.site_u_inv(n);
    const Mat v = sp.site_v(n), vin = sp.site_v_inv(n);
    std::array<LaxPolyEntry, 4> e;
    e[0] = {-s.beta * vin, Z, s.alpha * v};                          // (1,1)
    e[1] = {Z, u * ((s.a / qh) * v + (qh * s.b) * vin), Z};          // (1,2)
    e[2] = {Z, uin * ((qh * s.c) * v + (s.d / qh) * vin), Z};        // (2,1)
    e[3] = {s.gamma * v, Z, -s.delta * vin};                         // (2,2)
    return e;
  };

  auto mul = [&](const BlockPoly& x, const LaxPolyEntry& y) {
    BlockPoly out;
    out.deg = x.deg + 1;
    out.c.assign(static_cast<size_t>(2 * out.deg + 1), Z);
    for (int e = -x.deg; e <= x.deg; ++e) {
      const Mat& xe = x.c[static_cast<size_t>(e + x.deg)];
      if (xe.isZero(0)) continue;
      out.c[static_cast<size_t>(e - 1 + out.deg)] += xe * y.m1;
      out.c[static_cast<size_t>(e + out.deg)] += xe * y.z;
      out.c[static_cast<size_t>(e + 1 + out.deg)] += xe * y.p1;
    }
    return out;
  };
  auto add = [&](BlockPoly a, const BlockPoly& b) {
    for (size_t i = 0; i < a.c.size(); ++i) a.c[i] += b.c[i];
    return a;
  };

  auto top = lax_entries(hi);
  BlockPoly A{1, {top[0].m1, top[0].z, top[0].p1}};
  BlockPoly B{1, {top[1].m1, top[1].z, top[1].p1}};
  BlockPoly C{1, {top[2].m1, top[2].z, top[2].p1}};
  BlockPoly D{1, {top[3].m1, top[3].z, top[3].p1}};
  for (int n = hi - 1; n >= lo; --n) {
    const auto L = lax_entries(n);
    BlockPoly A2 = add(mul(A, L[0]), mul(B, L[2]));
    BlockPoly B2 = add(mul(A, L[1]), mul(B, L[3]));
    BlockPoly C2 = add(mul(C, L[0]), mul(D, L[2]));
    BlockPoly D2 = add(mul(C, L[1]), mul(D, L[3]));
    A = std::move(A2);
    B = std::move(B2);
    C = std::move(C2);
    D = std::move(D2);
  }
  MonodromyPoly out;
  out.deg = hi - lo + 1;
  out.A = std::move(A.c);
  out.B = std::move(B.c);
  out.C = std::move(C.c);
  out.D = std::move(D.c);
  return out;
}

Mat transfer(const CyclicSpace& sp, const ModelParams& p, cplx lambda) {
  const auto m = monodromy(sp, p, lambda);
  return m.A + m.D;
}

Eigen::Matrix4cd r_matrix(const UnityRoot& root, cplx lambda) {
  const cplx q = root.q;
  Eigen::Matrix4cd R = Eigen::Matrix4cd::Zero();
  R(0, 0) = q * lambda - 1.0 / (q * lambda);
  R(3, 3) = R(0, 0);
  R(1, 1) = lambda - 1.0 / lambda;
  R(2, 2) = R(1, 1);
  R(1, 2) = q - 1.0 / q;
  R(2, 1) = R(1, 2);
  return R;
}

double yang_baxter_residual(const CyclicSpace& sp, const ModelParams& p, cplx lambda, cplx mu) {
  if (lambda == cplx(0, 0) || mu == cplx(0, 0)) throw std::domain_error("yang_baxter: zero argument");
  const auto Ml = monodromy(sp, p, lambda);
  const auto Mm = monodromy(sp, p, mu);
  const Eigen::Matrix4cd R = r_matrix(p.root, lambda / mu);
  const long dim = sp.dim();

  // 4x4 blocks of (M(lambda) ox 1)(1 ox M(mu)) and the reversed order
  auto block = [&](const Monodromy& m, int i, int j) -> const Mat& {
    if (i == 0 && j == 0) return m.A;
    if (i == 0 && j == 1) return m.B;
    if (i == 1 && j == 0) return m.C;
    return m.D;
  };
  std::array<Mat, 16> lhs, rhs;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) {
          lhs[static_cast<size_t>((i * 2 + k) * 4 + j * 2 + l)] = block(Ml, i, j) * block(Mm, k, l);
          rhs[static_cast<size_t>((i * 2 + k) * 4 + j * 2 + l)] = block(Mm, k, l) * block(Ml, i, j);
        }

  double num = 0, scale = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      Mat acc = Mat::Zero(dim, dim);
      for (int s = 0; s < 4; ++s)
        acc += R(r, s) * lhs[static_cast<size_t>(s * 4 + c)] - rhs[static_cast<size_t>(r * 4 + s)] * R(s, c);
      num += acc.squaredNorm();
    }
  double mnorm = 0;
  for (const auto& b : lhs) mnorm = std::max(mnorm, b.norm());
  scale = R.norm() * mnorm;
  return std::sqrt(num) / std::max(scale, 1e-300);
}

cplx qdet_scalar_site(const ModelParams& p, int n, cplx lambda) {
  const cplx k = p.k_n(n);
  const cplx mp = p.mu_plus(n), mm = p.mu_minus(n);
  return k * (lambda / mp - mp / lambda) * (lambda / mm - mm / lambda);
}

cplx qdet_scalar(const ModelParams& p, cplx lambda) {
  cplx v(1, 0);
  for (int n = 1; n <= p.N(); ++n) v *= qdet_scalar_site(p, n, lambda);
  return v;
}

Mat qdet_operator(const CyclicSpace& sp, const ModelParams& p, cplx lambda) {
  const auto M1 = monodromy(sp, p, lambda);
  const auto M2 = monodromy(sp, p, lambda / p.root.q);
  return M1.A * M2.D - M1.B * M2.C;
}

double hermiticity_residual(const CyclicSpace& sp, const ModelParams& p, cplx lambda, int epsilon) {
  const auto M = monodromy(sp, p, lambda);
  const auto Mc = monodromy(sp, p, std::conj(lambda));
  // sigma = sigma_2 for epsilon = +1, sigma_1 for epsilon = -1
  Eigen::Matrix2cd sg;
  if (epsilon == 1)
    sg << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
  else
    sg << cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(0, 0);
  std::array<Mat, 4> mc{Mc.A, Mc.B, Mc.C, Mc.D};
  std::array<Mat, 4> md{M.A.adjoint(), M.B.adjoint(), M.C.adjoint(), M.D.adjoint()};
  double num = 0, scale = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Mat want = Mat::Zero(sp.dim(), sp.dim());
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s) want += sg(i, r) * mc[static_cast<size_t>(r * 2 + s)] * sg(s, j);
      num += (md[static_cast<size_t>(i * 2 + j)] - want).squaredNorm();
      scale += want.squaredNorm();
    }
  return std::sqrt(num) / std::max(std::sqrt(scale), 1e-300);
}

cplx qdet_scalar_selfadjoint(const ModelParams& p, cplx lambda, int epsilon) {
  const cplx q = p.root.q;
  const double eps = epsilon;
  cplx v(1, 0);
  for (const auto& s : p.sites) {
    const double ma = std::norm(s.a), mb = std::norm(s.b), mal = std::norm(s.alpha);
    v *= q * (ma * mb / mal) * (1.0 / lambda + eps * (mal / ma) * lambda / q) *
         (1.0 / lambda + eps * (mal / mb) * lambda / q);
  }
  return v;
}

}  // namespace tau2
