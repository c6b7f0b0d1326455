#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rcd/dataset.hpp"
#include "rcd/junction_sets.hpp"

namespace rcd {

/// Ordered tissue pair (t1, t2). Rank changes are reported from t1 to t2.
struct TissuePair {
  std::string first;
  std::string second;

  [[nodiscard]] TissuePair swapped() const { return {second, first}; }
  friend bool operator==(const TissuePair&, const TissuePair&) = default;
  friend auto operator<=>(const TissuePair&, const TissuePair&) = default;
};

/// Observations of one incompatible set restricted to one tissue pair,
/// grouped by spot. Cell index is `tissue * J + junction` with tissue 0 = t1.
/// Observations of one group share a spot (probe on one array) and hence the
/// spot random effect.
struct SpotTable {
  TissuePair tissues;
  std::vector<std::string> junctions;
  std::vector<int> cell;
  std::vector<double> value;
  std::vector<std::size_t> group_offsets{0};  // group g spans [offsets[g], offsets[g+1])

  [[nodiscard]] std::size_t junction_count() const noexcept { return junctions.size(); }
  [[nodiscard]] std::size_t cell_count() const noexcept { return 2 * junctions.size(); }
  [[nodiscard]] std::size_t observation_count() const noexcept { return value.size(); }
  [[nodiscard]] std::size_t group_count() const noexcept { return group_offsets.size() - 1; }
  [[nodiscard]] std::vector<std::size_t> cell_sizes() const;

  /// Appends one spot group; `cells[i]` pairs with `values[i]`.
  void add_group(std::span<const int> cells, std::span<const double> values);
};

/// Collects every channel observation of the set's probes whose tissue is
/// t1 or t2. A spot contributes one group (both channels when the array
/// co-hybridizes t1 and t2, otherwise the single matching channel).
SpotTable collect_observations(const Dataset& dataset, const IncompatibleSet& set,
                               const TissuePair& tissues);

/// Maximum-likelihood variance components of y = mu_cell + nu_spot + eps.
struct VarianceComponents {
  double rho = 0.0;  // var_spot / (var_spot + var_resid)
  double var_spot = 0.0;
  double var_resid = 0.0;
  double loglik = 0.0;
  bool at_upper_bound = false;  // rho pinned at 1 - delta
  bool identifiable = true;     // false when no spot carries two observations
};

inline constexpr double kRhoUpperGuard = 1e-6;
inline constexpr double kRhoTolerance = 1e-6;

/// Profile log-likelihood over rho on [0, 1 - kRhoUpperGuard]; the cell
/// means are profiled out by generalized least squares.
VarianceComponents profile_variance_ratio(const SpotTable& table);

/// Profile log-likelihood at a fixed rho (exposed for diagnostics and tests).
double profile_loglik(const SpotTable& table, double rho);

struct FitResult {
  std::string set_id;
  std::string gene;
  TissuePair tissues;
  std::vector<std::string> junctions;
  Eigen::MatrixXd mu_hat;    // 2 x J, row 0 = t1
  Eigen::MatrixXd sigma_mu;  // 2J x 2J, index tissue * J + junction
  double var_spot = 0.0;
  double var_resid = 1.0;
  double loglik = 0.0;
  std::size_t n_obs = 0;
  bool rho_at_upper_bound = false;

  [[nodiscard]] std::size_t junction_count() const noexcept { return junctions.size(); }
};

/// Fits the random-effects model to an already-collected table. Requires at
/// least two observations in every (tissue, junction) cell.
FitResult fit_spot_table(const SpotTable& table);

FitResult fit_set(const Dataset& dataset, const IncompatibleSet& set, const TissuePair& tissues);

}  // namespace rcd
