#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rcd/anosva.hpp"
#include "rcd/dataset.hpp"
#include "rcd/enrich.hpp"
#include "rcd/error.hpp"
#include "rcd/fdr.hpp"
#include "rcd/junction_sets.hpp"
#include "rcd/mixed_model.hpp"
#include "rcd/pipeline.hpp"
#include "rcd/rank_change.hpp"
#include "rcd/simulate.hpp"
#include "rcd/version.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

rcd::TissuePair to_pair(const std::pair<std::string, std::string>& p) { return {p.first, p.second}; }

py::tuple from_pair(const rcd::TissuePair& p) { return py::make_tuple(p.first, p.second); }

std::vector<rcd::enrich::CallUnit> units_from(const std::vector<std::string>& genes,
                                              const std::vector<bool>& significant) {
  if (genes.size() != significant.size()) throw py::value_error("genes and significant differ in length");
  std::vector<rcd::enrich::CallUnit> units;
  for (std::size_t i = 0; i < genes.size(); ++i) units.push_back({genes[i], significant[i]});
  return units;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rank change detection core";
  m.attr("__version__") = rcd::kVersion;

  py::register_exception<rcd::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<rcd::ModelError>(m, "ModelError", PyExc_RuntimeError);

  py::class_<rcd::JunctionProbe>(m, "JunctionProbe")
      .def(py::init<std::string, std::string, std::int64_t, std::int64_t>(), "probe_id"_a, "gene"_a, "j5"_a, "j3"_a)
      .def_readonly("probe_id", &rcd::JunctionProbe::probe_id)
      .def_readonly("gene", &rcd::JunctionProbe::gene)
      .def_readonly("j5", &rcd::JunctionProbe::j5)
      .def_readonly("j3", &rcd::JunctionProbe::j3)
      .def("__repr__", [](const rcd::JunctionProbe& p) {
        return "JunctionProbe(" + p.probe_id + ", " + p.gene + ", " + std::to_string(p.j5) + ", " +
               std::to_string(p.j3) + ")";
      });

  py::class_<rcd::Dataset>(m, "Dataset")
      .def_property_readonly("probes", &rcd::Dataset::probes)
      .def_property_readonly("tissues", &rcd::Dataset::tissues)
      .def_property_readonly("warnings", &rcd::Dataset::warnings)
      .def_property_readonly("summary", [](const rcd::Dataset& d) {
        const auto& s = d.summary();
        return py::dict("genes"_a = s.genes, "junctions"_a = s.junctions, "probes"_a = s.probes,
                        "arrays"_a = s.arrays, "spots"_a = s.spots, "records"_a = s.records);
      });

  m.def(
      "read_dataset",
      [](const std::filesystem::path& probes, const std::filesystem::path& design,
         const std::filesystem::path& intensities, bool log_input, double floor) {
        return rcd::validate_dataset(rcd::parse_probes(probes), rcd::parse_design(design),
                                     rcd::parse_intensities(intensities, {log_input, floor}));
      },
      "probes"_a, "design"_a, "intensities"_a, "log_input"_a = false, "floor"_a = 1.0,
      "Parse and validate the three input tables.");

  py::class_<rcd::IncompatibleSet>(m, "IncompatibleSet")
      .def_readonly("set_id", &rcd::IncompatibleSet::set_id)
      .def_readonly("gene", &rcd::IncompatibleSet::gene)
      .def_readonly("anchor", &rcd::IncompatibleSet::anchor)
      .def_property_readonly("members", [](const rcd::IncompatibleSet& s) {
        std::vector<std::string> ids;
        for (const auto& j : s.members) ids.push_back(j.id);
        return ids;
      })
      .def("__len__", &rcd::IncompatibleSet::size);

  m.def(
      "build_sets",
      [](const std::vector<rcd::JunctionProbe>& probes, std::size_t max_size) {
        return rcd::build_sets(probes, max_size).sets;
      },
      "probes"_a, "max_size"_a = 10, "Anchor-relative incompatible sets, oversized ones dropped.");

  py::class_<rcd::FitResult>(m, "FitResult")
      .def_readonly("set_id", &rcd::FitResult::set_id)
      .def_readonly("gene", &rcd::FitResult::gene)
      .def_property_readonly("tissues", [](const rcd::FitResult& f) { return from_pair(f.tissues); })
      .def_readonly("junctions", &rcd::FitResult::junctions)
      .def_readonly("mu_hat", &rcd::FitResult::mu_hat)
      .def_readonly("sigma_mu", &rcd::FitResult::sigma_mu)
      .def_readonly("var_spot", &rcd::FitResult::var_spot)
      .def_readonly("var_resid", &rcd::FitResult::var_resid)
      .def_readonly("loglik", &rcd::FitResult::loglik)
      .def_readonly("n_obs", &rcd::FitResult::n_obs)
      .def_readonly("rho_at_upper_bound", &rcd::FitResult::rho_at_upper_bound);

  m.def(
      "fit_set",
      [](const rcd::Dataset& ds, const rcd::IncompatibleSet& set, const std::pair<std::string, std::string>& t) {
        return rcd::fit_set(ds, set, to_pair(t));
      },
      "dataset"_a, "set"_a, "tissues"_a);

  py::class_<rcd::RankCall>(m, "RankCall")
      .def_readonly("junction", &rcd::RankCall::junction)
      .def_readonly("set_id", &rcd::RankCall::set_id)
      .def_readonly("gene", &rcd::RankCall::gene)
      .def_property_readonly("tissues", [](const rcd::RankCall& c) { return from_pair(c.tissues); })
      .def_readonly("U", &rcd::RankCall::U)
      .def_readonly("D", &rcd::RankCall::D)
      .def_readonly("E", &rcd::RankCall::E)
      .def_property_readonly("call", [](const rcd::RankCall& c) { return std::string(rcd::to_string(c.call)); })
      .def_readonly("draws", &rcd::RankCall::draws)
      .def_readonly("seed", &rcd::RankCall::seed);

  m.def("latent_ranks", [](const std::vector<double>& mu) { return rcd::latent_ranks(mu); }, "mu"_a);
  m.def(
      "call_dse", [](double U, double D, double kappa) { return std::string(rcd::to_string(rcd::call_dse(U, D, kappa))); },
      "U"_a, "D"_a, "kappa"_a = rcd::kDefaultKappa);
  m.def(
      "rank_change_probability",
      [](const rcd::FitResult& fit, std::size_t draws, std::uint64_t seed, double kappa) {
        return rcd::rank_change_probability(fit, draws, seed, kappa).calls;
      },
      "fit"_a, "draws"_a = rcd::kDefaultDraws, "seed"_a = 0, "kappa"_a = rcd::kDefaultKappa,
      py::call_guard<py::gil_scoped_release>());

  py::class_<rcd::AnosvaResult>(m, "AnosvaResult")
      .def_readonly("set_id", &rcd::AnosvaResult::set_id)
      .def_readonly("gene", &rcd::AnosvaResult::gene)
      .def_property_readonly("tissues", [](const rcd::AnosvaResult& r) { return from_pair(r.tissues); })
      .def_readonly("F", &rcd::AnosvaResult::F)
      .def_readonly("df1", &rcd::AnosvaResult::df1)
      .def_readonly("df2", &rcd::AnosvaResult::df2)
      .def_readonly("p", &rcd::AnosvaResult::p)
      .def_readonly("ss_interaction", &rcd::AnosvaResult::ss_interaction)
      .def_readonly("ss_residual", &rcd::AnosvaResult::ss_residual)
      .def_readonly("mu0_hat", &rcd::AnosvaResult::mu0_hat)
      .def_readonly("alpha_hat", &rcd::AnosvaResult::alpha_hat)
      .def_readonly("beta_hat", &rcd::AnosvaResult::beta_hat)
      .def_readonly("gamma_hat", &rcd::AnosvaResult::gamma_hat)
      .def_readonly("n_obs", &rcd::AnosvaResult::n_obs);

  m.def(
      "fit_anosva_cells",
      [](std::size_t rows, std::size_t cols, const std::vector<int>& cell, const std::vector<double>& value) {
        return rcd::fit_anosva_cells(rows, cols, cell, value);
      },
      "rows"_a, "cols"_a, "cell"_a, "value"_a, "Two-way ANOVA with interaction; cell = row * cols + col.");

  m.def(
      "qvalues",
      [](const std::vector<double>& p, const std::string& method, double lambda) {
        return rcd::qvalues(p, rcd::parse_fdr_method(method), lambda);
      },
      "p"_a, "method"_a = "storey", "lambda_"_a = 0.5);
  m.def("estimate_pi0", [](const std::vector<double>& p, double lambda) { return rcd::estimate_pi0(p, lambda); },
        "p"_a, "lambda_"_a = 0.5);
  m.def(
      "lfdr",
      [](const std::vector<double>& p, std::size_t bins, double lambda) {
        const auto r = rcd::lfdr(p, bins, lambda);
        return py::dict("lfdr"_a = r.lfdr, "pi0"_a = r.pi0, "fallback"_a = r.fallback, "warning"_a = r.warning);
      },
      "p"_a, "bins"_a = 50, "lambda_"_a = 0.5);

  py::class_<rcd::AnosvaCall>(m, "AnosvaCall")
      .def_readonly("result", &rcd::AnosvaCall::result)
      .def_readonly("q", &rcd::AnosvaCall::q)
      .def_readonly("lfdr", &rcd::AnosvaCall::lfdr);

  py::class_<rcd::SetFailure>(m, "SetFailure")
      .def_readonly("set_id", &rcd::SetFailure::set_id)
      .def_readonly("gene", &rcd::SetFailure::gene)
      .def_property_readonly("tissues", [](const rcd::SetFailure& f) { return from_pair(f.tissues); })
      .def_readonly("method", &rcd::SetFailure::method)
      .def_readonly("message", &rcd::SetFailure::message);

  py::class_<rcd::AnalysisResult>(m, "AnalysisResult")
      .def_property_readonly("sets", [](const rcd::AnalysisResult& r) { return r.sets.sets; })
      .def_property_readonly("tissue_pairs",
                             [](const rcd::AnalysisResult& r) {
                               py::list out;
                               for (const auto& p : r.tissue_pairs) out.append(from_pair(p));
                               return out;
                             })
      .def_readonly("rcd_calls", &rcd::AnalysisResult::rcd_calls)
      .def_readonly("anosva_calls", &rcd::AnalysisResult::anosva_calls)
      .def_readonly("failures", &rcd::AnalysisResult::failures)
      .def_readonly("tasks", &rcd::AnalysisResult::tasks)
      .def_readonly("failed_tasks", &rcd::AnalysisResult::failed_tasks)
      .def_readonly("warnings", &rcd::AnalysisResult::warnings);

  m.def(
      "analyze",
      [](const rcd::Dataset& ds, std::uint64_t seed, std::size_t draws, double kappa, std::size_t max_set_size,
         const std::vector<std::pair<std::string, std::string>>& tissues, const std::string& fdr_method,
         unsigned threads) {
        rcd::AnalysisOptions opt;
        opt.seed = seed;
        opt.draws = draws;
        opt.kappa = kappa;
        opt.max_set_size = max_set_size;
        for (const auto& t : tissues) opt.tissue_pairs.push_back(to_pair(t));
        opt.fdr_method = rcd::parse_fdr_method(fdr_method);
        opt.threads = threads;
        py::gil_scoped_release release;
        return rcd::run_analysis(ds, opt);
      },
      "dataset"_a, "seed"_a = 0, "draws"_a = rcd::kDefaultDraws, "kappa"_a = rcd::kDefaultKappa,
      "max_set_size"_a = 10, "tissues"_a = std::vector<std::pair<std::string, std::string>>{},
      "fdr_method"_a = "storey", "threads"_a = 0, "Fit both models to every set and tissue pair.");

  m.def("sigmoid_transform", [](double x) { return rcd::sim::sigmoid_transform(x); }, "x"_a);

  py::class_<rcd::sim::FprRow>(m, "FprRow")
      .def_readonly("scenario", &rcd::sim::FprRow::scenario)
      .def_readonly("anosva_fpr", &rcd::sim::FprRow::anosva_fpr)
      .def_readonly("rcd_fpr", &rcd::sim::FprRow::rcd_fpr)
      .def_readonly("n_sims", &rcd::sim::FprRow::n_sims)
      .def_readonly("mc_se", &rcd::sim::FprRow::mc_se)
      .def_readonly("failures", &rcd::sim::FprRow::failures);

  py::class_<rcd::sim::PowerPoint>(m, "PowerPoint")
      .def_readonly("response", &rcd::sim::PowerPoint::response)
      .def_readonly("method", &rcd::sim::PowerPoint::method)
      .def_readonly("effect_log2", &rcd::sim::PowerPoint::effect_log2)
      .def_readonly("n", &rcd::sim::PowerPoint::n)
      .def_readonly("detect_rate", &rcd::sim::PowerPoint::detect_rate)
      .def_readonly("n_sims", &rcd::sim::PowerPoint::n_sims);

  m.def(
      "run_fpr_study",
      [](std::size_t n_sims, std::uint64_t seed, std::size_t draws, unsigned threads) {
        rcd::sim::StudyOptions opt;
        opt.n_sims = n_sims;
        opt.seed = seed;
        opt.draws = draws;
        opt.threads = threads;
        return rcd::sim::run_fpr_study(rcd::sim::fpr_scenarios(opt), opt);
      },
      "n_sims"_a = 1000, "seed"_a = 1, "draws"_a = rcd::kDefaultDraws, "threads"_a = 0,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "run_power_study",
      [](std::size_t n_sims, std::uint64_t seed, const std::vector<int>& n_arrays, std::size_t draws,
         unsigned threads) {
        rcd::sim::StudyOptions opt;
        opt.n_sims = n_sims;
        opt.seed = seed;
        opt.draws = draws;
        opt.threads = threads;
        auto grid = rcd::sim::PowerGrid::defaults();
        if (!n_arrays.empty()) grid.n_arrays = n_arrays;
        return rcd::sim::run_power_study(grid, opt);
      },
      "n_sims"_a = 1000, "seed"_a = 1, "n_arrays"_a = std::vector<int>{}, "draws"_a = rcd::kDefaultDraws,
      "threads"_a = 0, py::call_guard<py::gil_scoped_release>());

  py::class_<rcd::enrich::EnrichmentResult>(m, "EnrichmentResult")
      .def_readonly("gene_set", &rcd::enrich::EnrichmentResult::gene_set)
      .def_readonly("missing_genes", &rcd::enrich::EnrichmentResult::missing_genes)
      .def_readonly("n_sig_in", &rcd::enrich::EnrichmentResult::n_sig_in)
      .def_readonly("n_total_in", &rcd::enrich::EnrichmentResult::n_total_in)
      .def_readonly("n_sig_out", &rcd::enrich::EnrichmentResult::n_sig_out)
      .def_readonly("n_total_out", &rcd::enrich::EnrichmentResult::n_total_out)
      .def_readonly("ratio", &rcd::enrich::EnrichmentResult::ratio)
      .def_property_readonly("ratio_flag", [](const rcd::enrich::EnrichmentResult& r) {
        return std::string(rcd::enrich::to_string(r.ratio_flag));
      });

  m.def(
      "enrichment_ratio",
      [](const std::vector<std::string>& genes, const std::vector<bool>& significant,
         const std::vector<std::string>& gene_set) {
        return rcd::enrich::enrichment_ratio(units_from(genes, significant), gene_set);
      },
      "genes"_a, "significant"_a, "gene_set"_a);

  m.def(
      "permutation_pvalue",
      [](const std::vector<std::string>& genes, const std::vector<bool>& significant,
         const std::vector<std::string>& gene_set, std::size_t n_perm, std::uint64_t seed, unsigned threads) {
        const auto units = units_from(genes, significant);
        py::gil_scoped_release release;
        return rcd::enrich::permutation_pvalue(units, gene_set, n_perm, seed, threads);
      },
      "genes"_a, "significant"_a, "gene_set"_a, "n_perm"_a = 10000, "seed"_a = 0, "threads"_a = 0);
}
