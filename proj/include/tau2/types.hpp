#pragma once

#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tau2 {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

constexpr cplx I{0.0, 1.0};

// Root-of-unity data: q = exp(-i*pi*p'/p) with p = 2l+1 odd and p' = 2l' even.
// Integer powers of q are taken from a precomputed table so that q^p == 1
// holds exactly under index reduction.
struct UnityRoot {
  int p = 3;
  int l = 1;
  int p_prime = 2;
  cplx q{};
  cplx q_half{};  // exp(-i*pi*p'/(2p)), the square root used throughout

  UnityRoot() { *this = make(3, 2); }

  static UnityRoot make(int p, int p_prime) {
    if (p < 3 || p % 2 == 0) throw std::invalid_argument("UnityRoot: p must be odd and >= 3");
    if (p_prime < 2 || p_prime % 2 != 0)
      throw std::invalid_argument("UnityRoot: p' must be even and >= 2");
    UnityRoot r{raw_tag{}};
    r.p = p;
    r.l = (p - 1) / 2;
    r.p_prime = p_prime;
    const double base = -M_PI * static_cast<double>(p_prime) / static_cast<double>(p);
    r.q = std::polar(1.0, base);
    r.q_half = std::polar(1.0, base / 2.0);
    r.pow_table_.resize(p);
    for (int j = 0; j < p; ++j) r.pow_table_[j] = std::polar(1.0, base * j);
    return r;
  }

  // q^k with k reduced mod p (exact cyclicity).
  cplx q_pow(long k) const {
    long m = k % p;
    if (m < 0) m += p;
    return pow_table_[static_cast<size_t>(m)];
  }

  // q^(k/2) for integer k, consistent with q_half.
  cplx q_half_pow(long k) const {
    long m = k % (2L * p);
    if (m < 0) m += 2L * p;
    return std::polar(1.0, -M_PI * static_cast<double>(p_prime) * static_cast<double>(m) /
                               (2.0 * static_cast<double>(p)));
  }

  bool primitive() const { return std::gcd(static_cast<long>(p_prime), static_cast<long>(p)) == 1; }

 private:
  struct raw_tag {};
  explicit UnityRoot(raw_tag) {}
  std::vector<cplx> pow_table_;
};

inline double rel_err(cplx got, cplx want) {
  return std::abs(got - want) / std::max(std::abs(want), 1.0);
}

inline double mat_rel_err(const Mat& got, const Mat& want) {
  return (got - want).norm() / std::max(want.norm(), 1.0);
}

// Principal p-th root.
inline cplx principal_root(cplx z, int p) {
  return std::pow(z, cplx(1.0 / static_cast<double>(p), 0.0));
}

}  // namespace tau2
