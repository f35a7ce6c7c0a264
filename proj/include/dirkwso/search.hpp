#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dirkwso/analysis.hpp"
#include "dirkwso/tableau.hpp"

namespace dirkwso {

/// Constraints and budget for a DIRK coefficient search. Decision variables
/// are the lower triangle of A including the diagonal; b is the last row of
/// A (stiff accuracy) and c the row sums.
struct SearchSpec {
  int stages = 4;
  int order = 3;             // target classical order, <= 4
  int qe = 2;                // target eigenvector-criterion order, <= 3
  int multistarts = 40;
  int iterations = 4000;     // Nelder-Mead iterations per penalty round
  int penalty_rounds = 3;
  std::uint64_t seed = 1;
  double diag_min = 1e-3;    // keeps stage solves well conditioned
  double coeff_bound = 4.0;  // random starts drawn from [-bound, bound]
  double eq_weight = 1e4;    // initial equality-penalty weight, x100 per round
  double ineq_weight = 1e4;
  int stability_samples = 256;  // coarse |R(iy)| <= 1 sampling inside the search
  double verify_tol = 1e-8;
};

struct SearchResult {
  bool success = false;
  std::optional<ButcherTableau> tableau;
  double objective = 0.0;            // truncation-error norm of the winner
  double best_constraint_residual = 0.0;  // max equality residual of the best point seen
  int winning_start = -1;
  std::string failure_reason;
  SchemeReport report;               // verification report of the returned tableau
};

/// Maps a parameter vector (lower triangle of A, row-major) to a tableau
/// with b = last row and c = row sums.
ButcherTableau tableau_from_parameters(const Vec& x, int stages);
Vec parameters_from_tableau(const ButcherTableau& t);

/// Named residuals of the equality constraints at x: the order conditions
/// through spec.order and, for each 2 <= j <= spec.qe, the eigenvector
/// defect and b^T tau^(j). Deterministic; never throws on finite input.
std::vector<std::pair<std::string, double>> constraint_residuals(const Vec& x,
                                                                 const SearchSpec& spec);

/// Multistart derivative-free penalty search. Any returned tableau has been
/// re-verified with analyze(): classical order and eigenvector order at
/// least the targets, A-stable, positive diagonal. Reports failure instead
/// of returning an unverified scheme. Deterministic given (spec, seed).
/// Requests with qe > 3 are rejected up front: DIRK schemes with invertible
/// A cannot satisfy the eigenvector criterion beyond order 3.
SearchResult search(const SearchSpec& spec);

}  // namespace dirkwso
