#include "doctest.h"
#include "tau2/weyl.hpp"

#include <Eigen/Eigenvalues>

using namespace tau2;

TEST_CASE("Weyl relations u_n v_m = q^{delta} v_m u_n") {
  for (int p : {3, 5}) {
    const auto root = UnityRoot::make(p, 2);
    const CyclicSpace sp(root, 2);
    for (int n = 1; n <= 2; ++n)
      for (int m = 1; m <= 2; ++m) {
        const Mat u = sp.site_u(n), v = sp.site_v(m);
        const cplx f = (n == m) ? root.q : cplx(1, 0);
        CHECK((u * v - f * v * u).norm() < 1e-13 * u.norm() * v.norm());
      }
  }
}

TEST_CASE("cyclicity: u^p and v^p are the identity") {
  const auto root = UnityRoot::make(5, 2);
  const CyclicSpace sp(root, 1);
  Mat up = Mat::Identity(sp.dim(), sp.dim()), vp = up;
  for (int i = 0; i < root.p; ++i) {
    up = up * sp.site_u(1);
    vp = vp * sp.site_v(1);
  }
  CHECK((up - Mat::Identity(sp.dim(), sp.dim())).norm() < 1e-13);
  CHECK((vp - Mat::Identity(sp.dim(), sp.dim())).norm() < 1e-13);
}

TEST_CASE("inverses") {
  const auto root = UnityRoot::make(3, 2);
  const CyclicSpace sp(root, 2);
  for (int n = 1; n <= 2; ++n) {
    CHECK((sp.site_u(n) * sp.site_u_inv(n) - Mat::Identity(sp.dim(), sp.dim())).norm() < 1e-14);
    CHECK((sp.site_v(n) * sp.site_v_inv(n) - Mat::Identity(sp.dim(), sp.dim())).norm() < 1e-14);
  }
}

TEST_CASE("u eigenvalue structure matches the digit convention") {
  const auto root = UnityRoot::make(3, 2);
  const CyclicSpace sp(root, 2);
  const Mat u1 = sp.site_u(1), u2 = sp.site_u(2);
  for (long idx = 0; idx < sp.dim(); ++idx) {
    CHECK(std::abs(u1(idx, idx) - root.q_pow(2L * sp.digit(idx, 1))) < 1e-15);
    CHECK(std::abs(u2(idx, idx) - root.q_pow(2L * sp.digit(idx, 2))) < 1e-15);
  }
}

TEST_CASE("theta: power p is the identity and eigenvalue multiplicities are p^{N-1}") {
  const auto root = UnityRoot::make(3, 2);
  const CyclicSpace sp(root, 3);
  const Mat th = sp.theta();
  Mat acc = Mat::Identity(sp.dim(), sp.dim());
  for (int i = 0; i < root.p; ++i) acc = acc * th;
  CHECK((acc - Mat::Identity(sp.dim(), sp.dim())).norm() < 1e-12);

  // oracle: direct diagonalization
  Eigen::ComplexEigenSolver<Mat> es(th, false);
  std::vector<int> counts(static_cast<size_t>(root.p), 0);
  for (long i = 0; i < sp.dim(); ++i) {
    const cplx e = es.eigenvalues()(i);
    int best = 0;
    double bd = 1e9;
    for (int k = 0; k < root.p; ++k) {
      const double d = std::abs(e - root.q_pow(k));
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    CHECK(bd < 1e-10);
    counts[static_cast<size_t>(best)]++;
  }
  for (int k = 0; k < root.p; ++k) CHECK(counts[static_cast<size_t>(k)] == 9);
}

TEST_CASE("theta projectors: resolution of identity, orthogonality, trace") {
  const auto root = UnityRoot::make(3, 2);
  const CyclicSpace sp(root, 2);
  const auto proj = sp.theta_projectors();
  Mat sum = Mat::Zero(sp.dim(), sp.dim());
  for (const auto& P : proj) sum += P;
  CHECK((sum - Mat::Identity(sp.dim(), sp.dim())).norm() < 1e-13);
  for (int k = 0; k < root.p; ++k)
    for (int k2 = 0; k2 < root.p; ++k2) {
      const Mat prod = proj[static_cast<size_t>(k)] * proj[static_cast<size_t>(k2)];
      if (k == k2)
        CHECK((prod - proj[static_cast<size_t>(k)]).norm() < 1e-13);
      else
        CHECK(prod.norm() < 1e-13);
    }
  for (int k = 0; k < root.p; ++k) {
    CHECK(std::abs(proj[static_cast<size_t>(k)].trace() - cplx(3, 0)) < 1e-12);
    const Mat lhs = sp.theta() * proj[static_cast<size_t>(k)];
    CHECK((lhs - root.q_pow(k) * proj[static_cast<size_t>(k)]).norm() < 1e-12);
  }
}
