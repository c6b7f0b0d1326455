#include "rcd/simulate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/core.h>

#include "rcd/anosva.hpp"
#include "rcd/error.hpp"
#include "rcd/parallel.hpp"

namespace rcd::sim {

SigmoidParams SigmoidParams::unit_slope(double width, double range_min, double midpoint) {
  SigmoidParams p{width, range_min, midpoint, width / 4.0};
  p.validate();
  return p;
}

void SigmoidParams::validate() const {
  if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("sigmoid width must be > 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("sigmoid scale must be > 0");
  if (!std::isfinite(range_min) || !std::isfinite(midpoint)) {
    throw std::invalid_argument("sigmoid range_min and midpoint must be finite");
  }
}

double sigmoid_transform(double x, const SigmoidParams& p) {
  return p.width / (1.0 + std::exp(-(x - p.midpoint) / p.scale)) + p.range_min;
}

double sigmoid_derivative(double x, const SigmoidParams& p) {
  const double e = std::exp(-(x - p.midpoint) / p.scale);
  return p.width * e / (p.scale * (1.0 + e) * (1.0 + e));
}

void Scenario::validate() const {
  if (n_junctions < 2) throw std::invalid_argument("scenario needs at least two junctions");
  if (n_arrays < 2 || n_arrays % 2 != 0) {
    throw std::invalid_argument("n_arrays must be even for a balanced dye swap");
  }
  if (!(resid_sd > 0.0) || !(tissue_sd >= 0.0)) throw std::invalid_argument("invalid noise scales");
  if (!(baseline.hi >= baseline.lo)) throw std::invalid_argument("baseline range inverted");
  if (junction_model == JunctionModel::dirichlet) {
    if (effect_kind == EffectKind::rank_reversal) {
      throw std::invalid_argument("rank reversal effects use the ratio junction model");
    }
    if (!dirichlet_alpha.empty() && dirichlet_alpha.size() != static_cast<std::size_t>(n_junctions)) {
      throw std::invalid_argument("dirichlet_alpha length must equal n_junctions");
    }
    for (double a : dirichlet_alpha) {
      if (!(a > 0.0)) throw std::invalid_argument("dirichlet_alpha entries must be positive");
    }
  } else {
    if (n_junctions != 2) throw std::invalid_argument("ratio junction model needs two junctions");
    if (!(null_log2_ratio.second >= null_log2_ratio.first)) {
      throw std::invalid_argument("null ratio range inverted");
    }
  }
  if (!(effect_log2 >= 0.0)) throw std::invalid_argument("effect_log2 must be >= 0");
  sigmoid.validate();
}

std::uint64_t replicate_seed(std::uint64_t seed, const std::string& scenario, std::size_t replicate) {
  return derive_seed(derive_seed(seed, scenario), static_cast<std::uint64_t>(replicate));
}

SimulatedDataset generate_dataset(const Scenario& sc, Rng& rng) {
  sc.validate();
  const auto J = static_cast<std::size_t>(sc.n_junctions);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  GroundTruth truth;
  truth.baseline = std::uniform_real_distribution<double>(sc.baseline.lo, sc.baseline.hi)(rng);
  truth.log_fold_change = sc.tissue_sd * std_normal(rng);
  truth.beta.assign(2, std::vector<double>(J, 0.0));

  if (sc.junction_model == JunctionModel::dirichlet) {
    std::vector<double> g(J);
    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double a = sc.dirichlet_alpha.empty() ? 1.0 : sc.dirichlet_alpha[j];
      g[j] = std::gamma_distribution<double>(a, 1.0)(rng);
      total += g[j];
    }
    for (std::size_t j = 0; j < J; ++j) {
      truth.beta[0][j] = truth.beta[1][j] = std::log2(g[j] / total);
    }
  } else {
    const bool reversal = sc.effect_kind == EffectKind::rank_reversal && sc.effect_log2 > 0.0;
    const double d =
        reversal ? sc.effect_log2 / 2.0
                 : std::uniform_real_distribution<double>(sc.null_log2_ratio.first,
                                                          sc.null_log2_ratio.second)(rng);
    truth.beta[0] = {-d, d};
    truth.beta[1] = reversal ? std::vector<double>{d, -d} : std::vector<double>{-d, d};
    truth.dse = reversal;
  }

  truth.mean.assign(2, std::vector<double>(J, 0.0));
  for (std::size_t t = 0; t < 2; ++t) {
    const double alpha = t == 0 ? 0.0 : truth.log_fold_change;
    for (std::size_t j = 0; j < J; ++j) {
      const double linear = truth.baseline + alpha + truth.beta[t][j];
      truth.mean[t][j] = sc.nonlinear ? sigmoid_transform(linear, sc.sigmoid) : linear;
    }
  }

  const std::array<std::string, 2> tissue_names{"N", "C"};
  std::vector<JunctionProbe> probes;
  for (std::size_t j = 0; j < J; ++j) {
    probes.push_back({fmt::format("J{}", j + 1), "SIM", static_cast<std::int64_t>(100 + 10 * j), 1000});
  }
  std::vector<ArrayChannelAssignment> design;
  std::vector<IntensityRecord> records;
  std::normal_distribution<double> noise(0.0, sc.resid_sd);
  for (int a = 0; a < sc.n_arrays; ++a) {
    const auto array_id = fmt::format("A{:02d}", a + 1);
    // Even arrays: N on Cy3; odd arrays: dyes swapped.
    const std::size_t cy3_tissue = a % 2 == 0 ? 0 : 1;
    const std::array<std::size_t, 2> tissue_of{cy3_tissue, 1 - cy3_tissue};
    design.push_back({array_id, Channel::Cy3, tissue_names[tissue_of[0]], a / 2 + 1});
    design.push_back({array_id, Channel::Cy5, tissue_names[tissue_of[1]], a / 2 + 1});
    for (std::size_t j = 0; j < J; ++j) {
      for (auto ch : {Channel::Cy3, Channel::Cy5}) {
        const auto t = tissue_of[static_cast<std::size_t>(ch)];
        records.push_back({probes[j].probe_id, array_id, ch, truth.mean[t][j] + noise(rng)});
      }
    }
  }

  auto sets = build_sets(probes, J);
  SimulatedDataset out{validate_dataset(probes, std::move(design), std::move(records)),
                       std::move(sets.sets.at(0)), {tissue_names[0], tissue_names[1]},
                       std::move(truth)};
  return out;
}

std::vector<ReplicateOutcome> run_scenario(const Scenario& scenario, const StudyOptions& options) {
  scenario.validate();
  std::vector<ReplicateOutcome> out(scenario.n_sims);
  parallel_for(scenario.n_sims, options.threads, [&](std::size_t r) {
    const auto seed = replicate_seed(scenario.seed, scenario.name, r);
    auto rng = make_rng(seed);
    auto sim = generate_dataset(scenario, rng);
    ReplicateOutcome& o = out[r];
    o.truth = std::move(sim.truth);
    try {
      const auto a = fit_anosva(sim.dataset, sim.set, sim.tissues);
      o.anosva_ok = true;
      o.anosva_p = a.p;
      o.alpha_hat_diff = a.alpha_hat(1) - a.alpha_hat(0);
      o.anosva_detect = a.p < options.alpha;
    } catch (const ModelError&) {
    }
    try {
      const auto fit = fit_set(sim.dataset, sim.set, sim.tissues);
      const auto rc = rank_change_probability(fit, options.draws, derive_seed(seed, "rcd"), options.kappa);
      o.rcd_ok = true;
      for (const auto& c : rc.calls) {
        o.rcd_max_posterior = std::max({o.rcd_max_posterior, c.U, c.D});
        o.rcd_detect = o.rcd_detect || c.call != Call::none;
      }
    } catch (const ModelError&) {
    }
  });
  return out;
}

std::vector<Scenario> fpr_scenarios(const StudyOptions& options) {
  std::vector<Scenario> out;
  for (int J : {2, 3}) {
    for (bool nonlinear : {false, true}) {
      Scenario s;
      s.name = fmt::format("{}_junction_{}", J, nonlinear ? "nonlinear" : "linear");
      s.n_junctions = J;
      s.nonlinear = nonlinear;
      s.n_arrays = 12;
      s.junction_model = JunctionModel::dirichlet;
      s.dirichlet_alpha.assign(static_cast<std::size_t>(J), 1.0);
      s.baseline = options.baseline;
      s.sigmoid = options.sigmoid;
      s.n_sims = options.n_sims;
      s.seed = options.seed;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<FprRow> run_fpr_study(const std::vector<Scenario>& scenarios,
                                  const StudyOptions& options) {
  std::vector<FprRow> rows;
  for (const auto& sc : scenarios) {
    if (sc.effect_kind != EffectKind::null) {
      throw std::invalid_argument("false-positive study needs null scenarios");
    }
    const auto outcomes = run_scenario(sc, options);
    FprRow row;
    row.scenario = sc.name;
    row.n_sims = outcomes.size();
    std::size_t a = 0;
    std::size_t r = 0;
    for (const auto& o : outcomes) {
      a += o.anosva_detect ? 1 : 0;
      r += o.rcd_detect ? 1 : 0;
      row.failures += (o.anosva_ok && o.rcd_ok) ? 0 : 1;
    }
    const auto n = static_cast<double>(std::max<std::size_t>(row.n_sims, 1));
    row.anosva_fpr = static_cast<double>(a) / n;
    row.rcd_fpr = static_cast<double>(r) / n;
    const auto se = [n](double p) { return std::sqrt(p * (1.0 - p) / n); };
    row.mc_se = std::max(se(row.anosva_fpr), se(row.rcd_fpr));
    rows.push_back(std::move(row));
  }
  return rows;
}

PowerGrid PowerGrid::defaults() {
  PowerGrid g;
  g.effects_nonlinear = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};  // up to 2 log2(8)
  g.effects_linear = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 2.0 * std::log2(1.5)};
  g.n_arrays = {4, 6, 8, 10, 12};
  return g;
}

Scenario power_scenario(bool nonlinear, double effect_log2, int n_arrays,
                        const StudyOptions& options) {
  Scenario s;
  s.name = fmt::format("power_{}_e{}_n{}", nonlinear ? "nonlinear" : "linear", effect_log2, n_arrays);
  s.n_junctions = 2;
  s.nonlinear = nonlinear;
  s.n_arrays = n_arrays;
  s.junction_model = JunctionModel::ratio;
  s.null_log2_ratio = nonlinear ? kNonlinearNullRatio : kLinearNullRatio;
  s.effect_kind = effect_log2 > 0.0 ? EffectKind::rank_reversal : EffectKind::null;
  s.effect_log2 = effect_log2;
  s.baseline = options.baseline;
  s.sigmoid = options.sigmoid;
  s.n_sims = options.n_sims;
  s.seed = options.seed;
  return s;
}

std::vector<PowerPoint> run_power_study(const PowerGrid& grid, const StudyOptions& options) {
  if (grid.n_arrays.empty() || (grid.effects_linear.empty() && grid.effects_nonlinear.empty())) {
    throw std::invalid_argument("power grid must be nonempty");
  }
  std::vector<PowerPoint> points;
  for (bool nonlinear : {false, true}) {
    const auto& effects = nonlinear ? grid.effects_nonlinear : grid.effects_linear;
    for (double effect : effects) {
      for (int n : grid.n_arrays) {
        const auto outcomes = run_scenario(power_scenario(nonlinear, effect, n, options), options);
        std::size_t a = 0;
        std::size_t r = 0;
        for (const auto& o : outcomes) {
          a += o.anosva_detect ? 1 : 0;
          r += o.rcd_detect ? 1 : 0;
        }
        const auto total = static_cast<double>(std::max<std::size_t>(outcomes.size(), 1));
        const std::string response = nonlinear ? "nonlinear" : "linear";
        points.push_back({response, "anosva", effect, n, static_cast<double>(a) / total, outcomes.size()});
        points.push_back({response, "rcd", effect, n, static_cast<double>(r) / total, outcomes.size()});
      }
    }
  }
  return points;
}

}  // namespace rcd::sim
