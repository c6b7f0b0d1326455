// rcd: rank change detection for differential splicing on junction arrays.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "rcd/dataset.hpp"
#include "rcd/enrich.hpp"
#include "rcd/error.hpp"
#include "rcd/junction_sets.hpp"
#include "rcd/pipeline.hpp"
#include "rcd/simulate.hpp"
#include "rcd/tsv.hpp"
#include "rcd/version.hpp"
#include "run_output.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFailures = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string command_line;
};

std::uint64_t resolve_seed(const Common& c, rcd::cli::Manifest& m) {
  if (c.seed) {
    m.seed_source = "flag";
    return m.seed = *c.seed;
  }
  std::random_device rd;
  m.seed_source = "entropy";
  return m.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

unsigned resolve_threads(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("RCD_THREADS"); env != nullptr && *env != '\0') {
    try {
      const auto v = std::stoul(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw rcd::ValidationError(fmt::format("RCD_THREADS must be a positive integer, got '{}'", env));
  }
  return 0;
}

std::vector<rcd::TissuePair> parse_tissue_pairs(const std::vector<std::string>& specs) {
  std::vector<rcd::TissuePair> pairs;
  for (const auto& s : specs) {
    const auto parts = rcd::tsv::split(s, ',');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty() || parts[0] == parts[1]) {
      throw rcd::ValidationError(fmt::format("--tissues expects t1,t2 with two distinct tissues, got '{}'", s));
    }
    pairs.push_back({parts[0], parts[1]});
  }
  return pairs;
}

template <class F>
std::string render(F&& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

void finish(rcd::cli::OutputDir& out, rcd::cli::Manifest& manifest) {
  auto names = out.names();
  names.push_back("manifest.json");
  out.stage("manifest.json", manifest.render(names));
  out.commit();
}

// ---------------------------------------------------------------- build-sets

struct BuildSetsArgs {
  fs::path probes;
  fs::path out;
  std::size_t max_set_size = 10;
};

int cmd_build_sets(const BuildSetsArgs& a, const Common& c) {
  rcd::cli::Manifest m;
  m.command = "build-sets";
  m.command_line = c.command_line;
  m.seed_source = "unused";
  m.add_input("probes", a.probes);
  m.parameters["max_set_size"] = a.max_set_size;

  const auto probes = rcd::parse_probes(a.probes);
  const auto built = rcd::build_sets(probes, a.max_set_size);
  for (const auto& e : built.excluded) {
    m.warnings.push_back(fmt::format("gene {} anchor {}: set of size {} exceeds max_set_size {}", e.gene, e.anchor,
                                     e.size, a.max_set_size));
  }
  m.counts["probes"] = probes.size();
  m.counts["sets"] = built.sets.size();
  m.counts["excluded"] = built.excluded.size();
  m.counts["singletons"] = built.singletons;
  m.counts["duplicates"] = built.duplicates;
  ordered_json hist = ordered_json::object();
  for (const auto& [size, n] : built.size_histogram) hist[std::to_string(size)] = n;
  m.counts["set_size_histogram"] = hist;

  rcd::cli::OutputDir out(a.out);
  out.stage("sets.tsv", render([&](std::ostream& o) { rcd::write_sets_tsv(o, built.sets); }));
  finish(out, m);
  fmt::print(std::cerr, "{} sets from {} probes ({} excluded)\n", built.sets.size(), probes.size(),
             built.excluded.size());
  return kExitOk;
}

// ------------------------------------------------------------------- analyze

struct AnalyzeArgs {
  fs::path probes, design, intensities, out;
  double kappa = rcd::kDefaultKappa;
  std::size_t draws = rcd::kDefaultDraws;
  std::size_t max_set_size = 10;
  std::vector<std::string> tissues;
  std::string fdr_method = "storey";
  double lambda = 0.5;
  std::size_t lfdr_bins = 50;
  double floor = 1.0;
  bool log_input = false;
  double max_failures = 0.05;
  bool dump_fits = false;
};

int cmd_analyze(const AnalyzeArgs& a, const Common& c) {
  if (!(a.kappa > 0.5 && a.kappa < 1.0)) throw rcd::ValidationError("--kappa must lie in (0.5, 1)");
  if (a.draws < rcd::kMinDraws) throw rcd::ValidationError(fmt::format("--draws must be >= {}", rcd::kMinDraws));
  if (!(a.lambda > 0.0 && a.lambda < 1.0)) throw rcd::ValidationError("--lambda must lie in (0, 1)");
  if (a.lfdr_bins < 2) throw rcd::ValidationError("--lfdr-bins must be >= 2");
  if (!(a.floor > 0.0)) throw rcd::ValidationError("--floor must be > 0");
  if (!(a.max_failures >= 0.0 && a.max_failures <= 1.0)) throw rcd::ValidationError("--max-failures must lie in [0, 1]");

  rcd::cli::Manifest m;
  m.command = "analyze";
  m.command_line = c.command_line;
  rcd::AnalysisOptions opt;
  opt.seed = resolve_seed(c, m);
  opt.kappa = a.kappa;
  opt.draws = a.draws;
  opt.max_set_size = a.max_set_size;
  opt.tissue_pairs = parse_tissue_pairs(a.tissues);
  try {
    opt.fdr_method = rcd::parse_fdr_method(a.fdr_method);
  } catch (const std::exception& e) {
    throw rcd::ValidationError(e.what());
  }
  opt.lambda = a.lambda;
  opt.lfdr_bins = a.lfdr_bins;
  opt.threads = resolve_threads(c.threads);
  opt.keep_fits = a.dump_fits;

  m.add_input("probes", a.probes);
  m.add_input("design", a.design);
  m.add_input("intensities", a.intensities);
  m.parameters["kappa"] = opt.kappa;
  m.parameters["draws"] = opt.draws;
  m.parameters["max_set_size"] = opt.max_set_size;
  m.parameters["tissues"] = a.tissues;
  m.parameters["fdr_method"] = std::string(rcd::to_string(opt.fdr_method));
  m.parameters["lambda"] = opt.lambda;
  m.parameters["lfdr_bins"] = opt.lfdr_bins;
  m.parameters["floor"] = a.floor;
  m.parameters["log_input"] = a.log_input;
  m.parameters["max_failures"] = a.max_failures;
  m.parameters["threads"] = opt.threads;

  const auto ds = rcd::validate_dataset(rcd::parse_probes(a.probes), rcd::parse_design(a.design),
                                        rcd::parse_intensities(a.intensities, {a.log_input, a.floor}));
  for (const auto& w : ds.warnings()) fmt::print(std::cerr, "warning: {}\n", w);
  const auto result = rcd::run_analysis(ds, opt);

  m.warnings = ds.warnings();
  m.warnings.insert(m.warnings.end(), result.warnings.begin(), result.warnings.end());
  for (const auto& f : result.failures) {
    m.warnings.push_back(fmt::format("{} failed for set {} ({}) {},{}: {}", f.method, f.set_id, f.gene,
                                     f.tissues.first, f.tissues.second, f.message));
  }
  const auto& s = ds.summary();
  m.counts["genes"] = s.genes;
  m.counts["junctions"] = s.junctions;
  m.counts["probes"] = s.probes;
  m.counts["arrays"] = s.arrays;
  m.counts["records"] = s.records;
  m.counts["sets"] = result.sets.sets.size();
  m.counts["sets_excluded"] = result.sets.excluded.size();
  m.counts["tissue_pairs"] = result.tissue_pairs.size();
  m.counts["tasks"] = result.tasks;
  m.counts["failed_tasks"] = result.failed_tasks;
  m.counts["rcd_up"] = result.count(rcd::Call::up);
  m.counts["rcd_down"] = result.count(rcd::Call::down);
  m.counts["max_jitter"] = result.max_jitter;

  if (result.failure_fraction() > a.max_failures) {
    for (const auto& f : result.failures) {
      fmt::print(std::cerr, "failure: {} set {} ({}) {},{}: {}\n", f.method, f.set_id, f.gene, f.tissues.first,
                 f.tissues.second, f.message);
    }
    fmt::print(std::cerr, "error: {} of {} set/tissue-pair fits failed ({:.3f} > --max-failures {})\n",
               result.failed_tasks, result.tasks, result.failure_fraction(), a.max_failures);
    return kExitFailures;
  }

  rcd::cli::OutputDir out(a.out);
  out.stage("sets.tsv", render([&](std::ostream& o) { rcd::write_sets_tsv(o, result.sets.sets); }));
  out.stage("rcd_calls.tsv", render([&](std::ostream& o) { rcd::write_rcd_calls_tsv(o, result.rcd_calls); }));
  out.stage("anosva_calls.tsv",
            render([&](std::ostream& o) { rcd::write_anosva_calls_tsv(o, result.anosva_calls); }));
  if (a.dump_fits) {
    out.stage("fits.tsv", render([&](std::ostream& o) { rcd::write_fit_diagnostics_tsv(o, result.fits); }));
  }
  finish(out, m);
  fmt::print(std::cerr, "{} sets x {} tissue pairs: {} up, {} down, {} failed\n", result.sets.sets.size(),
             result.tissue_pairs.size(), result.count(rcd::Call::up), result.count(rcd::Call::down),
             result.failed_tasks);
  return kExitOk;
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
  std::string study = "fpr";
  std::size_t sims = 1000;
  std::size_t draws = rcd::kDefaultDraws;
  double kappa = rcd::kDefaultKappa;
  double alpha = 0.05;
  double baseline_lo = 8.0;
  double baseline_hi = 14.0;
  std::vector<int> n_grid;
  fs::path out;
};

int cmd_simulate(const SimulateArgs& a, const Common& c) {
  if (a.sims == 0) throw rcd::ValidationError("--sims must be positive");
  if (a.draws < rcd::kMinDraws) throw rcd::ValidationError(fmt::format("--draws must be >= {}", rcd::kMinDraws));
  if (!(a.kappa > 0.5 && a.kappa < 1.0)) throw rcd::ValidationError("--kappa must lie in (0.5, 1)");
  if (!(a.baseline_hi >= a.baseline_lo)) throw rcd::ValidationError("--baseline range is inverted");

  rcd::cli::Manifest m;
  m.command = "simulate";
  m.command_line = c.command_line;
  rcd::sim::StudyOptions opt;
  opt.n_sims = a.sims;
  opt.seed = resolve_seed(c, m);
  opt.draws = a.draws;
  opt.kappa = a.kappa;
  opt.alpha = a.alpha;
  opt.threads = resolve_threads(c.threads);
  opt.baseline = {a.baseline_lo, a.baseline_hi};
  m.parameters["study"] = a.study;
  m.parameters["sims"] = a.sims;
  m.parameters["draws"] = a.draws;
  m.parameters["kappa"] = a.kappa;
  m.parameters["alpha"] = a.alpha;
  m.parameters["baseline"] = {a.baseline_lo, a.baseline_hi};
  m.parameters["sigmoid"] = {{"width", opt.sigmoid.width},
                             {"range_min", opt.sigmoid.range_min},
                             {"midpoint", opt.sigmoid.midpoint},
                             {"scale", opt.sigmoid.scale}};
  m.parameters["threads"] = opt.threads;

  rcd::cli::OutputDir out(a.out);
  if (a.study == "fpr") {
    const auto rows = rcd::sim::run_fpr_study(rcd::sim::fpr_scenarios(opt), opt);
    std::ostringstream o;
    o << "scenario\tanosva_fpr\trcd_fpr\tn_sims\tmc_se\tfailures\n";
    std::size_t failures = 0;
    for (const auto& r : rows) {
      fmt::print(o, "{}\t{}\t{}\t{}\t{}\t{}\n", r.scenario, r.anosva_fpr, r.rcd_fpr, r.n_sims, r.mc_se, r.failures);
      failures += r.failures;
    }
    m.counts["scenarios"] = rows.size();
    m.counts["failures"] = failures;
    out.stage("fpr_table.tsv", o.str());
  } else if (a.study == "power") {
    auto grid = rcd::sim::PowerGrid::defaults();
    if (!a.n_grid.empty()) grid.n_arrays = a.n_grid;
    for (int n : grid.n_arrays) {
      if (n < 2 || n % 2 != 0) throw rcd::ValidationError(fmt::format("--n values must be even, got {}", n));
    }
    m.parameters["n_grid"] = grid.n_arrays;
    m.parameters["effects_linear"] = grid.effects_linear;
    m.parameters["effects_nonlinear"] = grid.effects_nonlinear;
    const auto points = rcd::sim::run_power_study(grid, opt);
    std::ostringstream o;
    o << "response\tmethod\teffect_log2\tn\tdetect_rate\tn_sims\n";
    for (const auto& p : points) {
      fmt::print(o, "{}\t{}\t{}\t{}\t{}\t{}\n", p.response, p.method, p.effect_log2, p.n, p.detect_rate, p.n_sims);
    }
    m.counts["points"] = points.size();
    out.stage("power_curves.tsv", o.str());
  } else {
    throw rcd::ValidationError(fmt::format("--study must be fpr or power, got '{}'", a.study));
  }
  finish(out, m);
  return kExitOk;
}

// -------------------------------------------------------------------- enrich

struct EnrichArgs {
  fs::path calls, genes;
  std::optional<fs::path> out;
  std::vector<std::string> cutoffs;
  std::size_t perms = 10000;
  bool per_gene = false;
};

ordered_json to_json(const rcd::enrich::EnrichmentResult& r) {
  ordered_json j;
  j["gene_set"] = r.gene_set;
  j["missing_genes"] = r.missing_genes;
  j["cutoff"] = r.cutoff;
  j["n_sig_in"] = r.n_sig_in;
  j["n_total_in"] = r.n_total_in;
  j["n_sig_out"] = r.n_sig_out;
  j["n_total_out"] = r.n_total_out;
  j["ratio"] = r.ratio_flag == rcd::enrich::RatioFlag::finite ? ordered_json(r.ratio) : ordered_json(nullptr);
  j["ratio_flag"] = std::string(rcd::enrich::to_string(r.ratio_flag));
  j["perm_p"] = r.perm_p;
  j["n_perm"] = r.n_perm;
  return j;
}

int cmd_enrich(const EnrichArgs& a, const Common& c) {
  if (a.perms < rcd::enrich::kMinPermutations) {
    throw rcd::ValidationError(fmt::format("--perms must be >= {}", rcd::enrich::kMinPermutations));
  }
  rcd::cli::Manifest m;
  m.command = "enrich";
  m.command_line = c.command_line;
  const auto seed = resolve_seed(c, m);
  const auto threads = resolve_threads(c.threads);
  m.add_input("calls", a.calls);
  m.add_input("genes", a.genes);

  const auto table = rcd::enrich::read_call_table(a.calls);
  const auto genes = rcd::enrich::read_gene_list(a.genes);
  if (genes.empty()) throw rcd::ValidationError(fmt::format("{}: gene set is empty", a.genes.string()));

  std::vector<rcd::enrich::Cutoff> cutoffs;
  for (const auto& spec : a.cutoffs) {
    try {
      cutoffs.push_back(rcd::enrich::Cutoff::parse(spec));
    } catch (const rcd::ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw rcd::ValidationError(e.what());
    }
  }
  if (cutoffs.empty()) cutoffs.push_back(rcd::enrich::default_cutoff(table.kind));

  ordered_json results = ordered_json::array();
  for (std::size_t k = 0; k < cutoffs.size(); ++k) {
    auto units = rcd::enrich::apply_cutoff(table, cutoffs[k]);
    if (a.per_gene) units = rcd::enrich::collapse_per_gene(units);
    auto r = rcd::enrich::enrichment_ratio(units, genes, cutoffs[k].label());
    r.perm_p = rcd::enrich::permutation_pvalue(units, genes, a.perms, rcd::derive_seed(seed, k), threads);
    r.n_perm = a.perms;
    if (!r.missing_genes.empty()) {
      m.warnings.push_back(fmt::format("{} gene(s) of the set absent from the call table", r.missing_genes.size()));
    }
    results.push_back(to_json(r));
  }
  m.parameters["cutoffs"] = a.cutoffs;
  m.parameters["perms"] = a.perms;
  m.parameters["per_gene"] = a.per_gene;
  m.parameters["threads"] = threads;
  m.counts["call_rows"] = table.genes.size();
  m.counts["cutoffs"] = cutoffs.size();

  ordered_json doc;
  doc["calls_kind"] = table.kind == rcd::enrich::CallTable::Kind::rcd ? "rcd" : "anosva";
  doc["counting"] = a.per_gene ? "gene" : "junction";
  doc["seed"] = seed;
  doc["results"] = results;
  const auto text = doc.dump(2) + "\n";
  if (a.out) {
    rcd::cli::OutputDir out(*a.out);
    out.stage("enrichment.json", text);
    finish(out, m);
  } else {
    std::cout << text;
  }
  return kExitOk;
}

std::string join_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank change detection for differential splicing on junction arrays", "rcd"};
  app.set_version_flag("--version", std::string(rcd::kVersion));
  app.require_subcommand(1);

  Common common;
  common.command_line = join_argv(argc, argv);
  std::uint64_t seed_value = 0;
  const auto add_common = [&](CLI::App* sub, bool seeded) {
    if (seeded) sub->add_option("--seed", seed_value, "Master seed (drawn from entropy when absent)");
    sub->add_option("--threads", common.threads, "Worker threads (default: RCD_THREADS or all cores)");
  };

  BuildSetsArgs bs;
  auto* build = app.add_subcommand("build-sets", "Group junction probes into incompatible sets");
  build->add_option("--probes", bs.probes, "Probe table (probe_id gene j5 j3)")->required()->check(CLI::ExistingFile);
  build->add_option("--out", bs.out, "Output directory")->required();
  build->add_option("--max-set-size", bs.max_set_size, "Largest set retained")->capture_default_str();

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Fit RCD and ANOSVA to every set and tissue pair");
  analyze->add_option("--probes", an.probes, "Probe table")->required()->check(CLI::ExistingFile);
  analyze->add_option("--design", an.design, "Array/channel design table")->required()->check(CLI::ExistingFile);
  analyze->add_option("--intensities", an.intensities, "Intensity table")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", an.out, "Output directory")->required();
  analyze->add_option("--kappa", an.kappa, "Posterior cutoff for up/down calls")->capture_default_str();
  analyze->add_option("--draws", an.draws, "Monte-Carlo draws per set")->capture_default_str();
  analyze->add_option("--max-set-size", an.max_set_size, "Largest set retained")->capture_default_str();
  analyze->add_option("--tissues", an.tissues, "Tissue pair t1,t2 (repeatable; default all pairs)");
  analyze->add_option("--fdr-method", an.fdr_method, "storey or bh")->capture_default_str();
  analyze->add_option("--lambda", an.lambda, "Storey lambda")->capture_default_str();
  analyze->add_option("--lfdr-bins", an.lfdr_bins, "Histogram bins for local FDR")->capture_default_str();
  analyze->add_option("--floor", an.floor, "Raw intensity floor before log2")->capture_default_str();
  analyze->add_flag("--log-input", an.log_input, "Intensities are already log2");
  analyze->add_option("--max-failures", an.max_failures, "Tolerated fraction of failed fits")->capture_default_str();
  analyze->add_flag("--dump-fits", an.dump_fits, "Also write per-fit diagnostics (fits.tsv)");
  add_common(analyze, true);

  SimulateArgs sm;
  auto* simulate = app.add_subcommand("simulate", "Run the false-positive-rate or power study");
  simulate->add_option("--study", sm.study, "fpr or power")->capture_default_str();
  simulate->add_option("--sims", sm.sims, "Replicates per scenario")->capture_default_str();
  simulate->add_option("--draws", sm.draws, "Monte-Carlo draws per replicate")->capture_default_str();
  simulate->add_option("--kappa", sm.kappa, "Posterior cutoff")->capture_default_str();
  simulate->add_option("--alpha", sm.alpha, "ANOSVA p-value cutoff")->capture_default_str();
  simulate->add_option("--baseline-lo", sm.baseline_lo, "Lower bound of the baseline log2 level")->capture_default_str();
  simulate->add_option("--baseline-hi", sm.baseline_hi, "Upper bound of the baseline log2 level")->capture_default_str();
  simulate->add_option("--n", sm.n_grid, "Array counts of the power study (default 4 6 8 10 12)");
  simulate->add_option("--out", sm.out, "Output directory")->required();
  add_common(simulate, true);

  EnrichArgs en;
  std::string enrich_out;
  auto* enrich = app.add_subcommand("enrich", "Enrichment of significant calls in a gene set");
  enrich->add_option("--calls", en.calls, "rcd_calls.tsv or anosva_calls.tsv")->required()->check(CLI::ExistingFile);
  enrich->add_option("--genes", en.genes, "Gene list, one symbol per line")->required()->check(CLI::ExistingFile);
  enrich->add_option("--cutoff", en.cutoffs, "posterior:0.9 | lfdr:1e-3 | q:0.1 | p:0.05 (repeatable)");
  enrich->add_option("--perms", en.perms, "Random gene sets")->capture_default_str();
  enrich->add_flag("--per-gene", en.per_gene, "Count genes instead of junctions");
  enrich->add_option("--out", enrich_out, "Output directory (default: JSON to stdout)");
  add_common(enrich, true);
  add_common(build, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  for (auto* sub : {analyze, simulate, enrich}) {
    if (sub->parsed() && sub->count("--seed") > 0) common.seed = seed_value;
  }
  if (!enrich_out.empty()) en.out = enrich_out;

  try {
    if (build->parsed()) return cmd_build_sets(bs, common);
    if (analyze->parsed()) return cmd_analyze(an, common);
    if (simulate->parsed()) return cmd_simulate(sm, common);
    if (enrich->parsed()) return cmd_enrich(en, common);
  } catch (const rcd::ValidationError& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return 1;
  }
  return kExitUsage;
}
