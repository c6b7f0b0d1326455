#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rcd/anosva.hpp"
#include "rcd/dataset.hpp"
#include "rcd/fdr.hpp"
#include "rcd/junction_sets.hpp"
#include "rcd/mixed_model.hpp"
#include "rcd/rank_change.hpp"

namespace rcd {

struct AnalysisOptions {
  double kappa = kDefaultKappa;
  std::size_t draws = kDefaultDraws;
  std::uint64_t seed = 0;
  std::size_t max_set_size = 10;
  std::vector<TissuePair> tissue_pairs;  // empty: every unordered pair, sorted
  FdrMethod fdr_method = FdrMethod::storey;
  double lambda = 0.5;
  std::size_t lfdr_bins = 50;
  unsigned threads = 0;
  bool keep_fits = false;
};

struct SetFailure {
  std::string set_id;
  std::string gene;
  TissuePair tissues;
  std::string method;  // "rcd" | "anosva"
  std::string message;
};

struct AnosvaCall {
  AnosvaResult result;
  double q = 1.0;
  double lfdr = 1.0;
};

struct AnalysisResult {
  SetBuildResult sets;
  std::vector<TissuePair> tissue_pairs;
  std::vector<RankCall> rcd_calls;
  std::vector<AnosvaCall> anosva_calls;
  std::vector<FitResult> fits;  // filled when keep_fits
  std::vector<SetFailure> failures;
  std::size_t tasks = 0;         // (set, tissue pair) combinations
  std::size_t failed_tasks = 0;  // tasks where either method failed
  double max_jitter = 0.0;
  std::vector<std::string> warnings;

  [[nodiscard]] double failure_fraction() const noexcept {
    return tasks == 0 ? 0.0 : static_cast<double>(failed_tasks) / static_cast<double>(tasks);
  }
  [[nodiscard]] std::size_t count(Call c) const noexcept;
};

/// Every unordered pair of the dataset's tissues, in sorted order.
std::vector<TissuePair> all_tissue_pairs(const Dataset& dataset);

/// Builds sets, fits both models per (set, tissue pair) and applies the FDR
/// stack to the ANOSVA p-values of each tissue pair.
AnalysisResult run_analysis(const Dataset& dataset, const AnalysisOptions& options);

/// `set_id gene junction t1 t2 U D E call M seed`
void write_rcd_calls_tsv(std::ostream& out, std::span<const RankCall> calls);
/// `set_id gene t1 t2 F df1 df2 p q lfdr`
void write_anosva_calls_tsv(std::ostream& out, std::span<const AnosvaCall> calls);
/// Per-fit diagnostics: means, covariance eigenvalues and variance components.
void write_fit_diagnostics_tsv(std::ostream& out, std::span<const FitResult> fits);

}  // namespace rcd
