#pragma once

#include <vector>

#include "tau2/types.hpp"

namespace tau2 {

// The p^N-dimensional cyclic representation space. Basis states are labelled
// by digit tuples (k_1,...,k_N), k_i in {0..p-1}, with site 1 the least
// significant digit; u_n is diagonal with eigenvalue q^{2 k_n} and v_n maps
// z_n -> q z_n, i.e. shifts the digit by (p+1)/2.
class CyclicSpace {
 public:
  CyclicSpace(UnityRoot root, int N);

  const UnityRoot& root() const { return root_; }
  int N() const { return N_; }
  long dim() const { return dim_; }

  int digit(long idx, int site) const;                 // site in [1..N]
  long with_digit(long idx, int site, int k) const;    // replace digit
  long shift_digit(long idx, int site, int by) const;  // digit += by (mod p)

  // local p x p matrices
  Mat local_u() const;
  Mat local_v() const;

  // embed a local p x p operator at `site` (identity elsewhere)
  Mat promote(const Mat& local, int site) const;

  Mat site_u(int n) const;
  Mat site_v(int n) const;
  Mat site_u_inv(int n) const;
  Mat site_v_inv(int n) const;

  Mat theta() const;      // prod_n v_n
  Mat theta_inv() const;

  // p orthogonal projectors P_k with Theta P_k = q^k P_k, sum P_k = 1
  std::vector<Mat> theta_projectors() const;

 private:
  UnityRoot root_;
  int N_;
  long dim_;
};

// kron(A, B) with B on the lower (less significant) index block
Mat kron(const Mat& A, const Mat& B);

}  // namespace tau2
