#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace dirkwso {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct SingularMatrixError : std::runtime_error {
  SingularMatrixError(const std::string& what, int pivot) : std::runtime_error(what), pivot_index(pivot) {}
  int pivot_index;
};

/// Band storage (LAPACK layout) for an n x n matrix with kl sub- and ku
/// superdiagonals. The top kl rows of the storage are fill space for the
/// pivoting factorization.
class BandedMatrix {
 public:
  BandedMatrix(int n, int kl, int ku);

  int n() const { return n_; }
  int kl() const { return kl_; }
  int ku() const { return ku_; }

  bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

  /// Writable entry; (i, j) must lie within the band.
  double& at(int i, int j);
  /// Read anywhere; zero outside the band.
  double get(int i, int j) const;

  void set_zero();

  /// y = M x
  Vec multiply(const Vec& x) const;

  /// Dense copy (tests and small problems).
  Mat dense() const;

  Eigen::MatrixXd& storage() { return a_; }
  const Eigen::MatrixXd& storage() const { return a_; }

 private:
  int n_, kl_, ku_;
  Eigen::MatrixXd a_;  // (2 kl + ku + 1) x n
};

/// LU factorization of a banded matrix with partial pivoting.
class BandedLU {
 public:
  explicit BandedLU(const BandedMatrix& m);
  Vec solve(const Vec& rhs) const;

 private:
  int n_, kl_, ku_;
  Eigen::MatrixXd a_;          // factored band storage with fill
  std::vector<int> piv_;
};

/// Dense factorization-based solve. Throws SingularMatrixError with the
/// offending pivot index when M is numerically singular.
Vec linear_solve(const Mat& M, const Vec& rhs);
/// Banded factorization-based solve with partial pivoting.
Vec linear_solve(const BandedMatrix& M, const Vec& rhs);

}  // namespace dirkwso
