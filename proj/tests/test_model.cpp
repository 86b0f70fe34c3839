#include "doctest.h"
#include <random>

#include "tau2/model.hpp"

using namespace tau2;

namespace {
const UnityRoot R3 = UnityRoot::make(3, 2);
}

TEST_CASE("sampled parameters satisfy the constraints exactly") {
  const auto p = sample_params(R3, 3, 42);
  for (const auto& s : p.sites) CHECK(s.constraint_residual() < 1e-14);
}

TEST_CASE("lax entry (1,1) at unit site parameters") {
  ModelParams p;
  p.root = R3;
  p.sites = {SiteParams{1, 1, 1, 1, 1, 1, 1, 1}};
  const CyclicSpace sp(R3, 1);
  const cplx lam(0.7, 0.4);
  const auto L = lax(sp, p, 1, lam);
  const Mat want = lam * sp.site_v(1) - (1.0 / lam) * sp.site_v_inv(1);
  CHECK((L.a11 - want).norm() < 1e-14);
}

TEST_CASE("local quantum determinant vanishes at mu_plus") {
  const auto p = sample_params(R3, 2, 5);
  CHECK(std::abs(qdet_scalar_site(p, 1, p.mu_plus(1))) < 1e-12);
  CHECK(std::abs(qdet_scalar(p, p.mu_plus(1))) < 1e-10);
}

TEST_CASE("operator quantum determinant equals the closed-form scalar") {
  for (int N : {1, 2}) {
    const CyclicSpace sp(R3, N);
    const auto p = sample_params(R3, N, 17 + static_cast<unsigned>(N));
    for (const cplx lam : {cplx(0.9, 0.2), cplx(-0.4, 1.1)}) {
      const Mat op = qdet_operator(sp, p, lam);
      const cplx sc = qdet_scalar(p, lam);
      CHECK((op - sc * Mat::Identity(sp.dim(), sp.dim())).norm() / std::abs(sc) < 1e-11);
    }
  }
}

TEST_CASE("monodromy at N = 1 coincides with the Lax blocks") {
  const CyclicSpace sp(R3, 1);
  const auto p = sample_params(R3, 1, 3);
  const cplx lam(1.2, -0.3);
  const auto m = monodromy(sp, p, lam);
  const auto L = lax(sp, p, 1, lam);
  CHECK((m.A - L.a11).norm() < 1e-14);
  CHECK((m.B - L.a12).norm() < 1e-14);
  CHECK((m.C - L.a21).norm() < 1e-14);
  CHECK((m.D - L.a22).norm() < 1e-14);
}

TEST_CASE("B family commutes and transfer matrices commute") {
  const CyclicSpace sp(R3, 2);
  const auto p = sample_params(R3, 2, 7);
  const cplx pts[5] = {{0.8, 0.1}, {1.3, -0.4}, {-0.5, 0.9}, {0.2, 1.4}, {-1.1, -0.6}};
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) {
      const auto mi = monodromy(sp, p, pts[i]);
      const auto mj = monodromy(sp, p, pts[j]);
      const double scB = mi.B.norm() * mj.B.norm();
      CHECK((mi.B * mj.B - mj.B * mi.B).norm() < 1e-11 * scB);
      const Mat ti = mi.A + mi.D, tj = mj.A + mj.D;
      CHECK((ti * tj - tj * ti).norm() < 1e-11 * ti.norm() * tj.norm());
    }
}

TEST_CASE("theta commutations of Lemma 1") {
  const CyclicSpace sp(R3, 2);
  const auto p = sample_params(R3, 2, 11);
  const Mat th = sp.theta();
  for (const cplx lam : {cplx(0.6, 0.8), cplx(-1.2, 0.1)}) {
    const auto m = monodromy(sp, p, lam);
    const Mat tau = m.A + m.D;
    CHECK((tau * th - th * tau).norm() < 1e-11 * tau.norm() * th.norm());
    CHECK((th * m.C - R3.q * m.C * th).norm() < 1e-11 * m.C.norm());
    CHECK((m.B * th - R3.q * th * m.B).norm() < 1e-11 * m.B.norm());
    CHECK((m.A * th - th * m.A).norm() < 1e-12 * m.A.norm());
    CHECK((m.D * th - th * m.D).norm() < 1e-12 * m.D.norm());
  }
}

TEST_CASE("asymptotics of A and of the transfer matrix") {
  const int N = 2;
  const CyclicSpace sp(R3, N);
  const auto p = sample_params(R3, N, 13);
  const Mat th = sp.theta();

  const cplx big(1e6, 0);
  const auto mb = monodromy(sp, p, big);
  const Mat wantA = p.a_plus() * th;
  CHECK((std::pow(big, -N) * mb.A - wantA).norm() < 1e-6 * wantA.norm());

  const cplx small(1e-6, 0);
  const auto ms = monodromy(sp, p, small);
  const Mat tau = ms.A + ms.D;
  const Mat want = p.a_minus() * th.adjoint() + p.d_minus() * th;
  CHECK((std::pow(small, N) * tau - want).norm() < 1e-6 * want.norm());

  // exact top coefficients from the polynomial form
  const auto poly = monodromy_poly(sp, p, 1, N);
  CHECK((poly.coeff('A', N) - wantA).norm() < 1e-12 * wantA.norm());
  const Mat wantD = p.d_plus() * th.adjoint();
  CHECK((poly.coeff('D', N) - wantD).norm() < 1e-12 * wantD.norm());
}

TEST_CASE("monodromy polynomial form evaluates to the direct product") {
  const CyclicSpace sp(R3, 2);
  const auto p = sample_params(R3, 2, 19);
  const auto poly = monodromy_poly(sp, p, 1, 2);
  const cplx lam(0.77, -0.31);
  const auto m = monodromy(sp, p, lam);
  CHECK((poly.eval('A', lam) - m.A).norm() < 1e-12 * m.A.norm());
  CHECK((poly.eval('B', lam) - m.B).norm() < 1e-12 * m.B.norm());
  CHECK((poly.eval('C', lam) - m.C).norm() < 1e-12 * m.C.norm());
  CHECK((poly.eval('D', lam) - m.D).norm() < 1e-12 * m.D.norm());
}

TEST_CASE("Yang-Baxter residual: tiny for valid parameters, O(1) for broken constraint") {
  const CyclicSpace sp(R3, 2);
  auto p = sample_params(R3, 2, 23);
  const cplx pairs[5][2] = {{{0.9, 0.3}, {1.4, -0.2}},
                            {{-0.6, 0.7}, {0.5, 0.5}},
                            {{1.1, 0.0}, {0.3, -1.2}},
                            {{-0.8, -0.9}, {1.6, 0.4}},
                            {{0.4, 1.3}, {-1.0, 0.2}}};
  for (const auto& pr : pairs) CHECK(yang_baxter_residual(sp, p, pr[0], pr[1]) < 1e-11);

  // lambda = mu: R(1) is proportional to the permutation
  CHECK(yang_baxter_residual(sp, p, cplx(0.9, 0.3), cplx(0.9, 0.3)) < 1e-12);

  auto broken = p;
  broken.sites[0].gamma *= 1.5;  // violates alpha*gamma = a*c
  const double bad = yang_baxter_residual(sp, broken, cplx(0.9, 0.3), cplx(1.4, -0.2));
  CHECK(bad > 1e-5);  // at least 6 orders above the valid case
}

TEST_CASE("quantum determinant is gauge invariant") {
  const CyclicSpace sp(R3, 2);
  const auto p = sample_params(R3, 2, 29);
  const cplx lam(0.8, 0.5);
  const cplx want = qdet_scalar(p, lam);
  for (int t = 0; t < 3; ++t) {
    Mat G = Mat::Random(sp.dim(), sp.dim());
    G += 3.0 * Mat::Identity(sp.dim(), sp.dim());
    const Mat Gi = G.inverse();
    const auto m1 = monodromy(sp, p, lam);
    const auto m2 = monodromy(sp, p, lam / R3.q);
    const Mat op = (G * m1.A * Gi) * (G * m2.D * Gi) - (G * m1.B * Gi) * (G * m2.C * Gi);
    CHECK((op - want * Mat::Identity(sp.dim(), sp.dim())).norm() < 1e-10 * std::abs(want) * sp.dim());
  }
}

TEST_CASE("self-adjoint representations") {
  for (int eps : {1, -1}) {
    std::vector<std::array<cplx, 3>> free = {
        {cplx(1.1, 0.4), cplx(0.8, -0.6), cplx(1.3, 0.2)},
        {cplx(0.7, -0.9), cplx(1.5, 0.1), cplx(0.6, 0.8)}};
    const auto p = make_selfadjoint(R3, free, eps);
    for (const auto& s : p.sites) CHECK(s.constraint_residual() < 1e-12);

    const CyclicSpace sp(R3, 2);
    for (const cplx lam : {cplx(0.9, 0.4), cplx(-0.3, 1.2), cplx(1.4, -0.8), cplx(0.2, 0.6),
                           cplx(-1.1, -0.5)})
      CHECK(hermiticity_residual(sp, p, lam, eps) < 1e-12);

    // transfer matrix is Hermitian at real lambda
    const Mat tau = transfer(sp, p, cplx(1.23, 0));
    CHECK((tau - tau.adjoint()).norm() < 1e-12 * tau.norm());

    // modulus-only form of the quantum determinant
    const cplx lam(0.6, 1.1);
    CHECK(rel_err(qdet_scalar(p, lam), qdet_scalar_selfadjoint(p, lam, eps)) < 1e-11);
  }
}

TEST_CASE("real free parameters satisfy both constraint sets for eps = 1") {
  std::vector<std::array<cplx, 3>> free = {{cplx(1.1, 0), cplx(0.8, 0), cplx(1.3, 0)},
                                           {cplx(0.7, 0), cplx(1.5, 0), cplx(0.6, 0)}};
  const auto p = make_selfadjoint(R3, free, 1);
  for (const auto& s : p.sites) {
    CHECK(s.constraint_residual() < 1e-14);
    CHECK(std::abs(s.c + std::conj(s.b)) < 1e-14);
    CHECK(std::abs(s.d + std::conj(s.a)) < 1e-14);
  }
  CHECK(sadj_subvariety_residual(p) < 1e-13);
}

TEST_CASE("self-adjoint subvariety construction") {
  SadjSubvarietyInput in;
  in.mod_alpha = {1.2, 0.8, 1.4};
  in.mod_a = {0.9, 1.1, 0.7};
  in.mod_b = {1.3, 0.6, 1.0};
  in.phase_alpha = {0.37, -0.82};
  in.sign_ab = {1, -1, 1};
  in.phase_b1 = 0.21;
  in.epsilon = 1;
  const auto p = make_sadj_subvariety(R3, in);
  CHECK(sadj_subvariety_residual(p) < 1e-12);
  for (const auto& s : p.sites) CHECK(s.constraint_residual() < 1e-12);

  // a+ = d+ and a- = d- on the subvariety
  CHECK(rel_err(p.a_plus(), p.d_plus()) < 1e-12);
  CHECK(rel_err(p.a_minus(), p.d_minus()) < 1e-12);

  // and it is still a valid self-adjoint representation
  const CyclicSpace sp(R3, 3);
  CHECK(hermiticity_residual(sp, p, cplx(0.8, 0.3), 1) < 1e-12);
}

TEST_CASE("quantum determinant branch consistency over many draws") {
  // the factorized closed form must match the expanded scalar for any draw
  for (unsigned seed = 300; seed < 340; ++seed) {
    const auto p = sample_params(R3, 1, seed);
    const auto& s = p.sites[0];
    const cplx lam(0.83, 0.41);
    const cplx expanded = -(s.alpha * s.delta / R3.q) * lam * lam -
                          (s.beta * s.gamma * R3.q) / (lam * lam) - s.a * s.d - s.b * s.c;
    CHECK(rel_err(qdet_scalar_site(p, 1, lam), expanded) < 1e-12);
    CHECK(rel_err(p.k_n(1) * p.k_n(1), s.a * s.b * s.c * s.d) < 1e-12);
  }
}
