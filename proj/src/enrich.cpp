#include "rcd/enrich.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <fmt/core.h>

#include "rcd/error.hpp"
#include "rcd/parallel.hpp"
#include "rcd/random.hpp"
#include "rcd/tsv.hpp"

namespace rcd::enrich {
namespace {

struct GeneCounts {
  std::vector<std::string> genes;  // sorted universe
  std::vector<std::size_t> total;
  std::vector<std::size_t> sig;
};

GeneCounts count_by_gene(std::span<const CallUnit> units) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> m;
  for (const auto& u : units) {
    auto& c = m[u.gene];
    ++c.first;
    c.second += u.significant ? 1 : 0;
  }
  GeneCounts gc;
  for (const auto& [g, c] : m) {
    gc.genes.push_back(g);
    gc.total.push_back(c.first);
    gc.sig.push_back(c.second);
  }
  return gc;
}

struct RatioValue {
  double value = 0.0;
  RatioFlag flag = RatioFlag::finite;
};

RatioValue ratio_of(std::size_t sig_in, std::size_t tot_in, std::size_t sig_out, std::size_t tot_out) {
  if (tot_in == 0 || tot_out == 0) return {std::numeric_limits<double>::quiet_NaN(), RatioFlag::undefined};
  const double pin = static_cast<double>(sig_in) / static_cast<double>(tot_in);
  const double pout = static_cast<double>(sig_out) / static_cast<double>(tot_out);
  if (pout > 0.0) return {pin / pout, RatioFlag::finite};
  if (pin > 0.0) return {std::numeric_limits<double>::infinity(), RatioFlag::infinite};
  return {std::numeric_limits<double>::quiet_NaN(), RatioFlag::undefined};
}

// Indices of the gene set within the universe; throws when disjoint.
std::vector<std::size_t> locate(const GeneCounts& gc, std::span<const std::string> gene_set,
                                std::vector<std::string>* present, std::vector<std::string>* missing) {
  std::set<std::string> unique(gene_set.begin(), gene_set.end());
  if (unique.empty()) throw ValidationError("gene set is empty");
  std::vector<std::size_t> idx;
  for (const auto& g : unique) {
    const auto it = std::lower_bound(gc.genes.begin(), gc.genes.end(), g);
    if (it != gc.genes.end() && *it == g) {
      idx.push_back(static_cast<std::size_t>(it - gc.genes.begin()));
      if (present) present->push_back(g);
    } else if (missing) {
      missing->push_back(g);
    }
  }
  if (idx.empty()) {
    throw ValidationError("gene set is disjoint from the genes of the call table");
  }
  return idx;
}

double parse_cell(const std::string& text, const std::string& source, std::size_t line) {
  if (text == "NA" || text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  return tsv::parse_double(text, source, line);
}

}  // namespace

Cutoff Cutoff::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw ValidationError(fmt::format("cutoff `{}` must look like kind:value", spec));
  }
  const auto kind = spec.substr(0, colon);
  const auto value = spec.substr(colon + 1);
  Cutoff c;
  if (kind == "posterior" || kind == "rcd") c.kind = CutoffKind::posterior;
  else if (kind == "lfdr") c.kind = CutoffKind::lfdr;
  else if (kind == "q") c.kind = CutoffKind::qvalue;
  else if (kind == "p") c.kind = CutoffKind::pvalue;
  else throw ValidationError(fmt::format("unknown cutoff kind `{}`", kind));
  c.threshold = tsv::parse_double(value, "cutoff", 0);
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) {
    throw ValidationError(fmt::format("cutoff threshold must lie in (0, 1), got {}", c.threshold));
  }
  return c;
}

std::string Cutoff::label() const {
  switch (kind) {
    case CutoffKind::posterior:
      return fmt::format("posterior:{}", threshold);
    case CutoffKind::lfdr:
      return fmt::format("lfdr:{}", threshold);
    case CutoffKind::qvalue:
      return fmt::format("q:{}", threshold);
    case CutoffKind::pvalue:
      break;
  }
  return fmt::format("p:{}", threshold);
}

std::string_view to_string(RatioFlag f) noexcept {
  switch (f) {
    case RatioFlag::finite:
      return "finite";
    case RatioFlag::infinite:
      return "infinite";
    case RatioFlag::undefined:
      break;
  }
  return "undefined";
}

CallTable read_call_table(std::istream& in, const std::string& source) {
  const auto table = tsv::read(in, source);
  const auto gene = table.column("gene");
  if (!gene) throw ValidationError(source + ": call table lacks a `gene` column");
  tsv::require_width(table, table.header.size());
  CallTable out;
  const auto u = table.column("U");
  const auto d = table.column("D");
  if (u && d) {
    out.kind = CallTable::Kind::rcd;
    for (const auto& row : table.rows) {
      out.genes.push_back(row.fields[*gene]);
      out.posterior.push_back(std::max(parse_cell(row.fields[*u], source, row.line),
                                       parse_cell(row.fields[*d], source, row.line)));
    }
    return out;
  }
  const auto p = table.column("p");
  if (!p) throw ValidationError(source + ": call table needs U and D columns or a p column");
  out.kind = CallTable::Kind::anosva;
  const auto q = table.column("q");
  const auto l = table.column("lfdr");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : table.rows) {
    out.genes.push_back(row.fields[*gene]);
    out.p.push_back(parse_cell(row.fields[*p], source, row.line));
    out.q.push_back(q ? parse_cell(row.fields[*q], source, row.line) : nan);
    out.lfdr.push_back(l ? parse_cell(row.fields[*l], source, row.line) : nan);
  }
  return out;
}

CallTable read_call_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
  return read_call_table(in, path.string());
}

Cutoff default_cutoff(CallTable::Kind kind) {
  return kind == CallTable::Kind::rcd ? Cutoff{CutoffKind::posterior, 0.9}
                                      : Cutoff{CutoffKind::qvalue, 0.1};
}

std::vector<CallUnit> apply_cutoff(const CallTable& table, const Cutoff& cutoff) {
  const bool rcd = table.kind == CallTable::Kind::rcd;
  if (rcd != (cutoff.kind == CutoffKind::posterior)) {
    throw ValidationError(fmt::format("cutoff {} does not apply to an {} call table", cutoff.label(),
                                      rcd ? "RCD" : "ANOSVA"));
  }
  std::vector<CallUnit> units;
  units.reserve(table.genes.size());
  for (std::size_t i = 0; i < table.genes.size(); ++i) {
    bool sig = false;
    switch (cutoff.kind) {
      case CutoffKind::posterior:
        sig = table.posterior[i] > cutoff.threshold;
        break;
      case CutoffKind::lfdr:
        sig = table.lfdr[i] < cutoff.threshold;
        break;
      case CutoffKind::qvalue:
        sig = table.q[i] < cutoff.threshold;
        break;
      case CutoffKind::pvalue:
        sig = table.p[i] < cutoff.threshold;
        break;
    }
    units.push_back({table.genes[i], sig});
  }
  return units;
}

std::vector<CallUnit> collapse_per_gene(std::span<const CallUnit> units) {
  std::map<std::string, bool> any;
  for (const auto& u : units) any[u.gene] = any[u.gene] || u.significant;
  std::vector<CallUnit> out;
  for (const auto& [g, s] : any) out.push_back({g, s});
  return out;
}

std::vector<std::string> read_gene_list(std::istream& in) {
  std::vector<std::string> genes;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    genes.push_back(line.substr(start));
  }
  return genes;
}

std::vector<std::string> read_gene_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
  return read_gene_list(in);
}

EnrichmentResult enrichment_ratio(std::span<const CallUnit> units,
                                  std::span<const std::string> gene_set, std::string cutoff_label) {
  const auto gc = count_by_gene(units);
  EnrichmentResult r;
  r.cutoff = std::move(cutoff_label);
  const auto idx = locate(gc, gene_set, &r.gene_set, &r.missing_genes);
  std::size_t all_sig = 0;
  std::size_t all_total = 0;
  for (std::size_t g = 0; g < gc.genes.size(); ++g) {
    all_sig += gc.sig[g];
    all_total += gc.total[g];
  }
  for (auto i : idx) {
    r.n_sig_in += gc.sig[i];
    r.n_total_in += gc.total[i];
  }
  r.n_sig_out = all_sig - r.n_sig_in;
  r.n_total_out = all_total - r.n_total_in;
  const auto ratio = ratio_of(r.n_sig_in, r.n_total_in, r.n_sig_out, r.n_total_out);
  r.ratio = ratio.value;
  r.ratio_flag = ratio.flag;
  return r;
}

double permutation_pvalue(std::span<const CallUnit> units, std::span<const std::string> gene_set,
                          std::size_t n_perm, std::uint64_t seed, unsigned threads) {
  if (n_perm < kMinPermutations) {
    throw ValidationError(fmt::format("at least {} permutations required, got {}", kMinPermutations, n_perm));
  }
  const auto gc = count_by_gene(units);
  const auto idx = locate(gc, gene_set, nullptr, nullptr);
  const auto k = idx.size();
  const auto G = gc.genes.size();
  if (G <= k) {
    throw ValidationError("not enough genes outside the set to draw random gene sets");
  }
  std::size_t all_sig = 0;
  std::size_t all_total = 0;
  for (std::size_t g = 0; g < G; ++g) {
    all_sig += gc.sig[g];
    all_total += gc.total[g];
  }
  std::size_t sig_in = 0;
  std::size_t tot_in = 0;
  for (auto i : idx) {
    sig_in += gc.sig[i];
    tot_in += gc.total[i];
  }
  const auto observed = ratio_of(sig_in, tot_in, all_sig - sig_in, all_total - tot_in);
  if (observed.flag == RatioFlag::undefined) return 1.0;

  const auto chunks = (n_perm + kPermutationChunk - 1) / kPermutationChunk;
  std::vector<std::size_t> hits(chunks, 0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::vector<std::size_t> pool(G);
    const auto begin = c * kPermutationChunk;
    const auto end = std::min(n_perm, begin + kPermutationChunk);
    for (auto perm = begin; perm < end; ++perm) {
      std::iota(pool.begin(), pool.end(), 0);
      std::size_t s = 0;
      std::size_t t = 0;
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, G - 1);
        std::swap(pool[i], pool[pick(rng)]);
        s += gc.sig[pool[i]];
        t += gc.total[pool[i]];
      }
      const auto r = ratio_of(s, t, all_sig - s, all_total - t);
      if (r.flag != RatioFlag::undefined && r.value >= observed.value) ++hits[c];
    }
  });
  const auto count = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
  return static_cast<double>(count + 1) / static_cast<double>(n_perm + 1);
}

}  // namespace rcd::enrich
