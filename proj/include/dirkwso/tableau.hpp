#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dirkwso {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Runge-Kutta coefficient set. Immutable after construction: the abscissae
/// c are always the row sums of A and are never settable independently.
struct ButcherTableau {
  int s = 0;              // number of stages
  Mat A;                  // s x s stage coefficients
  Vec b;                  // quadrature weights
  Vec c;                  // abscissae, c = A e
  std::string name;
  std::optional<int> claimed_order;
  std::optional<int> claimed_wso;

  bool is_dirk() const;
  bool is_stiffly_accurate(double tol = 1e-14) const;
  // All diagonal entries nonzero for DIRK; determinant test otherwise.
  bool is_invertible(double tol = 1e-12) const;
  // c = nu * e for some constant nu.
  bool is_equal_time(double tol = 1e-12) const;
};

/// Builds a tableau, deriving c = A e. Throws std::invalid_argument on
/// dimension mismatch.
ButcherTableau make_tableau(const Mat& A, const Vec& b, std::string name = "");
ButcherTableau make_tableau(const Mat& A, const Vec& b, std::string name,
                            std::optional<int> claimed_order,
                            std::optional<int> claimed_wso);

struct RegistryEntry {
  std::string name;
  std::string description;   // scheme properties and, for literature schemes, their source
  ButcherTableau tableau;
};

/// Built-in schemes, fixed order. Contains the three high-WSO DIRK schemes
/// plus reference comparators and backward Euler.
const std::vector<RegistryEntry>& registry();

/// Exact coefficients of a named scheme. Unknown names raise
/// std::invalid_argument listing what is available.
ButcherTableau registry_get(std::string_view name);

struct TableauParseError : std::runtime_error {
  explicit TableauParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Line-oriented text form; decimals carry 17 significant digits so that
/// parse(serialize(t)) reproduces every coefficient bit-exactly.
std::string serialize(const ButcherTableau& t);

/// Inverse of serialize. Also accepts optional `c <i> <v>` lines (validated
/// against row sums to 1e-13, never stored) and an optional `dirk` marker
/// line (validated against the A entries). Throws TableauParseError naming
/// the offending line.
ButcherTableau parse_tableau(const std::string& text);

}  // namespace dirkwso
