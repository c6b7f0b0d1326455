#include "rcd/pipeline.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <variant>

#include <fmt/core.h>

#include "rcd/error.hpp"
#include "rcd/parallel.hpp"

namespace rcd {
namespace {

struct TaskOutput {
  std::optional<RankChangeResult> rcd;
  std::optional<FitResult> fit;
  std::optional<AnosvaResult> anosva;
  std::vector<SetFailure> failures;
};

std::string join(std::span<const std::string> items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : std::string(sep)) + s;
  return out;
}

}  // namespace

std::size_t AnalysisResult::count(Call c) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(rcd_calls.begin(), rcd_calls.end(), [c](const RankCall& r) { return r.call == c; }));
}

std::vector<TissuePair> all_tissue_pairs(const Dataset& dataset) {
  const auto& t = dataset.tissues();
  std::vector<TissuePair> pairs;
  for (std::size_t a = 0; a < t.size(); ++a) {
    for (std::size_t b = a + 1; b < t.size(); ++b) pairs.push_back({t[a], t[b]});
  }
  return pairs;
}

AnalysisResult run_analysis(const Dataset& dataset, const AnalysisOptions& options) {
  if (!(options.kappa > 0.5 && options.kappa < 1.0)) {
    throw ValidationError(fmt::format("kappa must lie in (0.5, 1), got {}", options.kappa));
  }
  if (options.draws < kMinDraws) {
    throw ValidationError(fmt::format("at least {} draws required, got {}", kMinDraws, options.draws));
  }
  if (options.max_set_size < 2) throw ValidationError("max set size must be at least 2");

  AnalysisResult result;
  result.warnings = dataset.warnings();
  result.tissue_pairs = options.tissue_pairs.empty() ? all_tissue_pairs(dataset) : options.tissue_pairs;
  const auto& known = dataset.tissues();
  for (const auto& pair : result.tissue_pairs) {
    if (pair.first == pair.second) throw ValidationError("tissue pair must name two different tissues");
    for (const auto* t : {&pair.first, &pair.second}) {
      if (!std::binary_search(known.begin(), known.end(), *t)) {
        throw ValidationError(fmt::format("tissue {} not present in design", *t));
      }
    }
  }
  if (result.tissue_pairs.empty()) throw ValidationError("design has fewer than two tissues");

  result.sets = build_sets(dataset.probes(), options.max_set_size);
  for (const auto& ex : result.sets.excluded) {
    result.warnings.push_back(fmt::format("set of anchor {} (gene {}) has {} junctions > max {}; skipped",
                                          ex.anchor, ex.gene, ex.size, options.max_set_size));
  }

  const auto& sets = result.sets.sets;
  const auto n_pairs = result.tissue_pairs.size();
  result.tasks = sets.size() * n_pairs;
  std::vector<TaskOutput> outputs(result.tasks);

  parallel_for(result.tasks, options.threads, [&](std::size_t task) {
    const auto& set = sets[task / n_pairs];
    const auto& pair = result.tissue_pairs[task % n_pairs];
    auto& out = outputs[task];
    std::optional<SpotTable> table;
    try {
      table = collect_observations(dataset, set, pair);
    } catch (const ModelError& e) {
      out.failures.push_back({set.set_id, set.gene, pair, "rcd", e.what()});
      out.failures.push_back({set.set_id, set.gene, pair, "anosva", e.what()});
      return;
    }
    try {
      auto fit = fit_spot_table(*table);
      fit.set_id = set.set_id;
      fit.gene = set.gene;
      out.rcd = rank_change_probability(fit, options.draws,
                                        rank_stream_seed(options.seed, set.set_id, pair), options.kappa);
      if (options.keep_fits) out.fit = std::move(fit);
    } catch (const ModelError& e) {
      out.failures.push_back({set.set_id, set.gene, pair, "rcd", e.what()});
    }
    try {
      auto a = fit_anosva(*table);
      a.set_id = set.set_id;
      a.gene = set.gene;
      out.anosva = std::move(a);
    } catch (const ModelError& e) {
      out.failures.push_back({set.set_id, set.gene, pair, "anosva", e.what()});
    }
  });

  std::map<TissuePair, std::vector<std::size_t>> anosva_by_pair;
  for (auto& out : outputs) {
    if (!out.failures.empty()) ++result.failed_tasks;
    for (auto& f : out.failures) result.failures.push_back(std::move(f));
    if (out.rcd) {
      result.max_jitter = std::max(result.max_jitter, out.rcd->jitter);
      for (auto& c : out.rcd->calls) result.rcd_calls.push_back(std::move(c));
    }
    if (out.fit) result.fits.push_back(std::move(*out.fit));
    if (out.anosva) {
      anosva_by_pair[out.anosva->tissues].push_back(result.anosva_calls.size());
      result.anosva_calls.push_back({std::move(*out.anosva), 1.0, 1.0});
    }
  }

  for (const auto& [pair, idx] : anosva_by_pair) {
    std::vector<double> p;
    p.reserve(idx.size());
    for (auto i : idx) p.push_back(result.anosva_calls[i].result.p);
    const auto q = qvalues(p, options.fdr_method, options.lambda);
    const auto l = lfdr(p, options.lfdr_bins, options.lambda);
    if (l.fallback) result.warnings.push_back(fmt::format("{} vs {}: {}", pair.first, pair.second, l.warning));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      result.anosva_calls[idx[k]].q = q[k];
      result.anosva_calls[idx[k]].lfdr = l.lfdr[k];
    }
  }
  if (result.max_jitter > 0.0) {
    result.warnings.push_back(fmt::format("covariance jitter applied (max {})", result.max_jitter));
  }
  return result;
}

void write_rcd_calls_tsv(std::ostream& out, std::span<const RankCall> calls) {
  out << "set_id\tgene\tjunction\tt1\tt2\tU\tD\tE\tcall\tM\tseed\n";
  for (const auto& c : calls) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", c.set_id, c.gene, c.junction,
                       c.tissues.first, c.tissues.second, c.U, c.D, c.E, to_string(c.call), c.draws,
                       c.seed);
  }
}

void write_anosva_calls_tsv(std::ostream& out, std::span<const AnosvaCall> calls) {
  out << "set_id\tgene\tt1\tt2\tF\tdf1\tdf2\tp\tq\tlfdr\n";
  for (const auto& c : calls) {
    const auto& r = c.result;
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.set_id, r.gene, r.tissues.first,
                       r.tissues.second, r.F, r.df1, r.df2, r.p, c.q, c.lfdr);
  }
}

void write_fit_diagnostics_tsv(std::ostream& out, std::span<const FitResult> fits) {
  out << "set_id\tgene\tt1\tt2\tjunctions\tmu_t1\tmu_t2\tsigma_eigenvalues\tvar_spot\tvar_resid\tloglik\tn_obs\n";
  for (const auto& f : fits) {
    std::vector<std::string> m1;
    std::vector<std::string> m2;
    for (Eigen::Index j = 0; j < f.mu_hat.cols(); ++j) {
      m1.push_back(fmt::format("{}", f.mu_hat(0, j)));
      m2.push_back(fmt::format("{}", f.mu_hat(1, j)));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.sigma_mu, Eigen::EigenvaluesOnly);
    std::vector<std::string> ev;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) ev.push_back(fmt::format("{}", eig.eigenvalues()(i)));
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", f.set_id, f.gene, f.tissues.first,
                       f.tissues.second, join(f.junctions, ","), join(m1, ","), join(m2, ","), join(ev, ","),
                       f.var_spot, f.var_resid, f.loglik, f.n_obs);
  }
}

}  // namespace rcd
