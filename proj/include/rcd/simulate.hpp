#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcd/dataset.hpp"
#include "rcd/junction_sets.hpp"
#include "rcd/mixed_model.hpp"
#include "rcd/random.hpp"
#include "rcd/rank_change.hpp"

namespace rcd::sim {

/// Logistic model of the array's bounded log-intensity response,
/// P(x) = width / (1 + exp(-(x - midpoint) / scale)) + range_min.
struct SigmoidParams {
  double width = 9.2;
  double range_min = 6.3;
  double midpoint = 10.9;
  double scale = 9.2 / 4.0;  // unit slope at the midpoint

  /// Parameters with scale = width / 4.
  static SigmoidParams unit_slope(double width, double range_min, double midpoint);
  void validate() const;  // throws std::invalid_argument
};

double sigmoid_transform(double x, const SigmoidParams& params = {});
double sigmoid_derivative(double x, const SigmoidParams& params = {});

enum class EffectKind { null, rank_reversal };

/// Normal-tissue baseline log2 intensity, drawn uniformly.
struct BaselineDist {
  double lo = 8.0;
  double hi = 14.0;
};

/// How the junction effects beta are produced.
///  - dirichlet: exp2(beta) ~ Dirichlet(alpha), identical in both tissues.
///  - ratio: two junctions with effects (-d, +d). Under the null d is drawn
///    from `null_log2_ratio` and shared by both tissues; under a rank reversal
///    d = effect_log2 / 2 and the effects swap in the second tissue, so each
///    junction's effect changes by effect_log2 between tissues.
enum class JunctionModel { dirichlet, ratio };

struct Scenario {
  std::string name;
  int n_junctions = 2;
  bool nonlinear = false;
  int n_arrays = 12;
  double tissue_sd = 1.0;
  double resid_sd = 0.22;
  JunctionModel junction_model = JunctionModel::dirichlet;
  std::vector<double> dirichlet_alpha;  // empty means all ones
  std::pair<double, double> null_log2_ratio{0.0, 0.0};
  EffectKind effect_kind = EffectKind::null;
  double effect_log2 = 0.0;  // per-junction change between tissues, 2 log2(y)
  BaselineDist baseline;
  SigmoidParams sigmoid;
  std::size_t n_sims = 1000;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

struct GroundTruth {
  bool dse = false;
  double baseline = 0.0;
  double log_fold_change = 0.0;           // alpha of the second tissue
  std::vector<std::vector<double>> beta;  // [tissue][junction]
  std::vector<std::vector<double>> mean;  // expected observation, after the link
};

struct SimulatedDataset {
  Dataset dataset;
  IncompatibleSet set;
  TissuePair tissues;  // (N, C)
  GroundTruth truth;
};

/// One replicate: balanced dye swap over n_arrays, one probe per junction,
/// no spot effect, Gaussian residuals.
SimulatedDataset generate_dataset(const Scenario& scenario, Rng& rng);

/// Replicate stream seed: hash(seed, scenario name, replicate).
std::uint64_t replicate_seed(std::uint64_t seed, const std::string& scenario, std::size_t replicate);

struct StudyOptions {
  std::size_t n_sims = 1000;
  std::uint64_t seed = 1;
  std::size_t draws = kDefaultDraws;
  double kappa = kDefaultKappa;
  double alpha = 0.05;  // ANOSVA p-value cutoff
  unsigned threads = 0;
  BaselineDist baseline;
  SigmoidParams sigmoid;
};

/// Per-replicate outcome of both methods.
struct ReplicateOutcome {
  bool anosva_ok = false;
  bool rcd_ok = false;
  double anosva_p = 1.0;
  double alpha_hat_diff = 0.0;  // ANOSVA tissue effect difference (C - N)
  double rcd_max_posterior = 0.0;  // max over junctions of max(U, D)
  bool anosva_detect = false;
  bool rcd_detect = false;
  GroundTruth truth;
};

std::vector<ReplicateOutcome> run_scenario(const Scenario& scenario, const StudyOptions& options);

/// The four null scenarios: {2, 3} junctions x {linear, nonlinear}.
std::vector<Scenario> fpr_scenarios(const StudyOptions& options);

struct FprRow {
  std::string scenario;
  double anosva_fpr = 0.0;
  double rcd_fpr = 0.0;
  std::size_t n_sims = 0;
  double mc_se = 0.0;  // larger binomial standard error of the two rates
  std::size_t failures = 0;
};

std::vector<FprRow> run_fpr_study(const std::vector<Scenario>& scenarios,
                                  const StudyOptions& options);

struct PowerGrid {
  std::vector<double> effects_nonlinear;
  std::vector<double> effects_linear;
  std::vector<int> n_arrays;

  static PowerGrid defaults();
};

struct PowerPoint {
  std::string response;  // "linear" | "nonlinear"
  std::string method;    // "anosva" | "rcd"
  double effect_log2 = 0.0;
  int n = 0;
  double detect_rate = 0.0;
  std::size_t n_sims = 0;
};

/// Ranges of the null junction effect d of the power study.
inline constexpr std::pair<double, double> kNonlinearNullRatio{0.5849625007211562, 3.0};  // log2 1.5 .. log2 8
inline constexpr std::pair<double, double> kLinearNullRatio{0.07038932789139801,
                                                            0.5849625007211562};  // log2 1.05 .. log2 1.5

Scenario power_scenario(bool nonlinear, double effect_log2, int n_arrays,
                        const StudyOptions& options);

std::vector<PowerPoint> run_power_study(const PowerGrid& grid, const StudyOptions& options);

}  // namespace rcd::sim
