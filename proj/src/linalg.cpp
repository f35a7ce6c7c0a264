#include "dirkwso/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace dirkwso {

BandedMatrix::BandedMatrix(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku) {
  if (n <= 0 || kl < 0 || ku < 0 || kl >= n || ku >= n)
    throw std::invalid_argument("BandedMatrix: need 0 <= kl, ku < n");
  a_ = Eigen::MatrixXd::Zero(2 * kl_ + ku_ + 1, n_);
}

double& BandedMatrix::at(int i, int j) {
  if (i < 0 || i >= n_ || j < 0 || j >= n_ || !in_band(i, j))
    throw std::out_of_range("BandedMatrix::at(" + std::to_string(i) + "," + std::to_string(j) +
                            ") outside band");
  return a_(kl_ + ku_ + i - j, j);
}

double BandedMatrix::get(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_ || !in_band(i, j)) return 0.0;
  return a_(kl_ + ku_ + i - j, j);
}

void BandedMatrix::set_zero() { a_.setZero(); }

Vec BandedMatrix::multiply(const Vec& x) const {
  Vec y = Vec::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    const int i0 = std::max(0, j - ku_), i1 = std::min(n_ - 1, j + kl_);
    for (int i = i0; i <= i1; ++i) y(i) += a_(kl_ + ku_ + i - j, j) * x(j);
  }
  return y;
}

Mat BandedMatrix::dense() const {
  Mat d = Mat::Zero(n_, n_);
  for (int j = 0; j < n_; ++j) {
    const int i0 = std::max(0, j - ku_), i1 = std::min(n_ - 1, j + kl_);
    for (int i = i0; i <= i1; ++i) d(i, j) = a_(kl_ + ku_ + i - j, j);
  }
  return d;
}

BandedLU::BandedLU(const BandedMatrix& m)
    : n_(m.n()), kl_(m.kl()), ku_(m.ku()), a_(m.storage()), piv_(m.n()) {
  // Band LU with partial pivoting; pivoting widens the upper bandwidth to
  // ku + kl, which lives in the fill rows of the storage.
  const int kt = kl_ + ku_;  // total upper bandwidth after fill
  const double scale = std::max(a_.cwiseAbs().maxCoeff(), 1e-300);
  for (int j = 0; j < n_; ++j) {
    const int ilast = std::min(n_ - 1, j + kl_);
    int p = j;
    double pmax = std::abs(a_(kl_ + ku_ + j - j, j));
    for (int i = j + 1; i <= ilast; ++i) {
      const double v = std::abs(a_(kl_ + ku_ + i - j, j));
      if (v > pmax) {
        pmax = v;
        p = i;
      }
    }
    if (pmax < 1e-14 * scale)
      throw SingularMatrixError(
          "banded LU: negligible pivot " + std::to_string(pmax) + " at column " + std::to_string(j),
          j);
    piv_[j] = p;
    const int jlast = std::min(n_ - 1, j + kt);
    if (p != j) {
      for (int k = j; k <= jlast; ++k)
        std::swap(a_(kl_ + ku_ + j - k, k), a_(kl_ + ku_ + p - k, k));
    }
    const double d = a_(kl_ + ku_, j);
    for (int i = j + 1; i <= ilast; ++i) {
      const double l = a_(kl_ + ku_ + i - j, j) / d;
      a_(kl_ + ku_ + i - j, j) = l;
      if (l != 0.0)
        for (int k = j + 1; k <= jlast; ++k)
          a_(kl_ + ku_ + i - k, k) -= l * a_(kl_ + ku_ + j - k, k);
    }
  }
}

Vec BandedLU::solve(const Vec& rhs) const {
  if (rhs.size() != n_) throw std::invalid_argument("BandedLU::solve: size mismatch");
  Vec x = rhs;
  const int kt = kl_ + ku_;
  for (int j = 0; j < n_; ++j) {
    if (piv_[j] != j) std::swap(x(j), x(piv_[j]));
    const int ilast = std::min(n_ - 1, j + kl_);
    for (int i = j + 1; i <= ilast; ++i) x(i) -= a_(kl_ + ku_ + i - j, j) * x(j);
  }
  for (int j = n_ - 1; j >= 0; --j) {
    const int jlast = std::min(n_ - 1, j + kt);
    double s = x(j);
    for (int k = j + 1; k <= jlast; ++k) s -= a_(kl_ + ku_ + j - k, k) * x(k);
    x(j) = s / a_(kl_ + ku_, j);
  }
  return x;
}

Vec linear_solve(const Mat& M, const Vec& rhs) {
  if (M.rows() != M.cols() || M.rows() != rhs.size())
    throw std::invalid_argument("linear_solve: dimension mismatch");
  Eigen::PartialPivLU<Mat> lu(M);
  const Vec diag = lu.matrixLU().diagonal().cwiseAbs();
  const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
  int k;
  if (diag.minCoeff(&k) < 1e-14 * scale)
    throw SingularMatrixError("dense LU: negligible pivot at index " + std::to_string(k),
                              static_cast<int>(k));
  return lu.solve(rhs);
}

Vec linear_solve(const BandedMatrix& M, const Vec& rhs) { return BandedLU(M).solve(rhs); }

}  // namespace dirkwso
