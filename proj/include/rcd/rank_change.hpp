#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rcd/mixed_model.hpp"

namespace rcd {

/// Rank of each element among all elements: the count of elements <= it.
/// Ties share the maximal rank.
std::vector<int> latent_ranks(std::span<const double> mu);

enum class Call { up, down, none };

std::string_view to_string(Call c) noexcept;

inline constexpr double kDefaultKappa = 0.9;
inline constexpr std::size_t kDefaultDraws = 10000;
inline constexpr std::size_t kMinDraws = 1000;

/// up iff U > kappa, down iff D > kappa. kappa must lie in (0.5, 1).
Call call_dse(double U, double D, double kappa = kDefaultKappa);

struct RankCall {
  std::string junction;
  std::string set_id;
  std::string gene;
  TissuePair tissues;
  double U = 0.0;  // Pr(rank in t1 < rank in t2)
  double D = 0.0;  // Pr(rank in t1 > rank in t2)
  double E = 0.0;  // Pr(ranks equal)
  Call call = Call::none;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
};

/// Lower-triangular factor of a covariance used for joint sampling.
struct CovarianceFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // added to the diagonal when the clipped matrix was singular
};

/// Symmetrizes, then Cholesky-factors; on failure clips negative eigenvalues
/// at zero and, if still needed, adds a diagonal jitter of 1e-10 times the
/// mean variance. Throws ModelError when the matrix is materially indefinite.
CovarianceFactor factor_covariance(const Eigen::MatrixXd& sigma);

struct RankChangeResult {
  std::vector<RankCall> calls;  // one per junction, in fit order
  double jitter = 0.0;
};

/// Monte-Carlo estimate of U, D, E for every junction from `draws` joint
/// samples of all 2J means. Sampling uses the lexicographically ordered
/// tissue pair, so swapping t1 and t2 with the same seed exchanges U and D
/// exactly.
RankChangeResult rank_change_probability(const FitResult& fit, std::size_t draws,
                                         std::uint64_t seed, double kappa = kDefaultKappa);

/// Per-(set, tissue pair) stream seed; independent of pair orientation.
std::uint64_t rank_stream_seed(std::uint64_t master_seed, std::string_view set_id,
                               const TissuePair& tissues);

}  // namespace rcd
