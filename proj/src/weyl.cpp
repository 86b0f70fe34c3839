#include "tau2/weyl.hpp"

namespace tau2 {

CyclicSpace::CyclicSpace(UnityRoot root, int N) : root_(root), N_(N) {
  if (N < 1) throw std::invalid_argument("CyclicSpace: N >= 1 required");
  dim_ = 1;
  for (int i = 0; i < N; ++i) {
    dim_ *= root_.p;
    if (dim_ > 1'000'000) throw std::invalid_argument("CyclicSpace: dimension too large");
  }
}

int CyclicSpace::digit(long idx, int site) const {
  long d = idx;
  for (int s = 1; s < site; ++s) d /= root_.p;
  return static_cast<int>(d % root_.p);
}

long CyclicSpace::with_digit(long idx, int site, int k) const {
  long stride = 1;
  for (int s = 1; s < site; ++s) stride *= root_.p;
  const int old = digit(idx, site);
  return idx + (static_cast<long>(k) - old) * stride;
}

long CyclicSpace::shift_digit(long idx, int site, int by) const {
  int k = digit(idx, site) + by;
  k %= root_.p;
  if (k < 0) k += root_.p;
  return with_digit(idx, site, k);
}

Mat CyclicSpace::local_u() const {
  Mat u = Mat::Zero(root_.p, root_.p);
  for (int k = 0; k < root_.p; ++k) u(k, k) = root_.q_pow(2L * k);
  return u;
}

Mat CyclicSpace::local_v() const {
  // v |k> = |k + (p+1)/2 mod p>, realizing z -> q z on z = q^{2k}
  Mat v = Mat::Zero(root_.p, root_.p);
  const int s = (root_.p + 1) / 2;
  for (int k = 0; k < root_.p; ++k) v((k + s) % root_.p, k) = 1.0;
  return v;
}

Mat CyclicSpace::promote(const Mat& local, int site) const {
  if (site < 1 || site > N_) throw std::invalid_argument("CyclicSpace: site out of range");
  Mat out = Mat::Zero(dim_, dim_);
  long lo_dim = 1;
  for (int s = 1; s < site; ++s) lo_dim *= root_.p;
  const long hi_dim = dim_ / (lo_dim * root_.p);
  for (long hi = 0; hi < hi_dim; ++hi)
    for (int a = 0; a < root_.p; ++a)
      for (int b = 0; b < root_.p; ++b) {
        const cplx v = local(a, b);
        if (v == cplx(0, 0)) continue;
        for (long lo = 0; lo < lo_dim; ++lo) {
          const long row = (hi * root_.p + a) * lo_dim + lo;
          const long col = (hi * root_.p + b) * lo_dim + lo;
          out(row, col) = v;
        }
      }
  return out;
}

Mat CyclicSpace::site_u(int n) const { return promote(local_u(), n); }
Mat CyclicSpace::site_v(int n) const { return promote(local_v(), n); }
Mat CyclicSpace::site_u_inv(int n) const { return promote(local_u().adjoint(), n); }
Mat CyclicSpace::site_v_inv(int n) const { return promote(local_v().transpose(), n); }

Mat CyclicSpace::theta() const {
  Mat t = site_v(1);
  Mat acc = t;
  for (int n = 2; n <= N_; ++n) acc = site_v(n) * acc;
  return acc;
}

Mat CyclicSpace::theta_inv() const { return theta().adjoint(); }

std::vector<Mat> CyclicSpace::theta_projectors() const {
  const Mat th = theta();
  std::vector<Mat> pows(static_cast<size_t>(root_.p));
  pows[0] = Mat::Identity(dim_, dim_);
  for (int j = 1; j < root_.p; ++j) pows[static_cast<size_t>(j)] = th * pows[static_cast<size_t>(j - 1)];
  std::vector<Mat> proj(static_cast<size_t>(root_.p));
  for (int k = 0; k < root_.p; ++k) {
    Mat P = Mat::Zero(dim_, dim_);
    for (int j = 0; j < root_.p; ++j) P += root_.q_pow(-static_cast<long>(k) * j) * pows[static_cast<size_t>(j)];
    proj[static_cast<size_t>(k)] = P / static_cast<double>(root_.p);
  }
  return proj;
}

Mat kron(const Mat& A, const Mat& B) {
  Mat out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

}  // namespace tau2
