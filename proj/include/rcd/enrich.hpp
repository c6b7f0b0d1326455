#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rcd::enrich {

/// One counted event: a junction-level call (or a gene, after collapsing).
struct CallUnit {
  std::string gene;
  bool significant = false;
};

enum class CutoffKind {
  posterior,  // max(U, D) > threshold
  lfdr,       // lfdr < threshold
  qvalue,     // q < threshold
  pvalue,     // p < threshold
};

struct Cutoff {
  CutoffKind kind = CutoffKind::posterior;
  double threshold = 0.9;

  /// Parses `posterior:0.9`, `lfdr:1e-3`, `q:0.1` or `p:0.05`.
  static Cutoff parse(std::string_view spec);
  [[nodiscard]] std::string label() const;
};

/// Either an RCD call table (U, D columns) or an ANOSVA table (p, q, lfdr).
struct CallTable {
  enum class Kind { rcd, anosva };
  Kind kind = Kind::rcd;
  std::vector<std::string> genes;
  std::vector<double> posterior;  // rcd: max(U, D)
  std::vector<double> p, q, lfdr;  // anosva
};

CallTable read_call_table(std::istream& in, const std::string& source = "calls");
CallTable read_call_table(const std::filesystem::path& path);

/// Default cutoff for a table kind: posterior:0.9 (rcd) or q:0.1 (anosva).
Cutoff default_cutoff(CallTable::Kind kind);

std::vector<CallUnit> apply_cutoff(const CallTable& table, const Cutoff& cutoff);

/// Gene-level indicator counting: one unit per gene, significant if any is.
std::vector<CallUnit> collapse_per_gene(std::span<const CallUnit> units);

/// One gene symbol per line; blank and `#` lines ignored.
std::vector<std::string> read_gene_list(std::istream& in);
std::vector<std::string> read_gene_list(const std::filesystem::path& path);

enum class RatioFlag { finite, infinite, undefined };

struct EnrichmentResult {
  std::vector<std::string> gene_set;       // genes of the set present in the table
  std::vector<std::string> missing_genes;  // genes of the set absent from the table
  std::string cutoff;
  std::size_t n_sig_in = 0;
  std::size_t n_total_in = 0;
  std::size_t n_sig_out = 0;
  std::size_t n_total_out = 0;
  double ratio = 0.0;
  RatioFlag ratio_flag = RatioFlag::finite;
  double perm_p = 1.0;
  std::size_t n_perm = 0;
};

std::string_view to_string(RatioFlag f) noexcept;

/// (n_sig_in / n_total_in) / (n_sig_out / n_total_out). A zero outside
/// proportion yields an infinite (or, with no inside hits, undefined) ratio.
/// Throws ValidationError when the gene set is disjoint from the table.
EnrichmentResult enrichment_ratio(std::span<const CallUnit> units,
                                  std::span<const std::string> gene_set,
                                  std::string cutoff_label = {});

inline constexpr std::size_t kMinPermutations = 100;
inline constexpr std::size_t kPermutationChunk = 1000;

/// Fraction of random same-size gene sets, drawn without replacement from
/// the genes of the table, whose ratio is >= the observed one, with the
/// (count + 1) / (n_perm + 1) correction. Permutation chunk c uses its own
/// stream derived from (seed, c).
double permutation_pvalue(std::span<const CallUnit> units, std::span<const std::string> gene_set,
                          std::size_t n_perm, std::uint64_t seed, unsigned threads = 0);

}  // namespace rcd::enrich
