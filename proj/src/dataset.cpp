#include "rcd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include <fmt/core.h>
#include <fmt/format.h>

#include "rcd/error.hpp"
#include "rcd/tsv.hpp"

namespace rcd {
namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
  return in;
}

std::string join_limited(const std::set<std::string>& items, std::size_t limit = 10) {
  std::string out;
  std::size_t n = 0;
  for (const auto& item : items) {
    if (n == limit) {
      out += fmt::format(", ... ({} more)", items.size() - limit);
      break;
    }
    out += (n++ == 0 ? "" : ", ") + item;
  }
  return out;
}

}  // namespace

std::string_view to_string(Channel c) noexcept { return c == Channel::Cy3 ? "Cy3" : "Cy5"; }

Channel parse_channel(std::string_view text) {
  if (text == "Cy3" || text == "cy3" || text == "CY3") return Channel::Cy3;
  if (text == "Cy5" || text == "cy5" || text == "CY5") return Channel::Cy5;
  throw ValidationError(fmt::format("unknown channel `{}` (expected Cy3 or Cy5)", text));
}

std::vector<JunctionProbe> parse_probes(std::istream& in, const std::string& source) {
  const auto table = tsv::read(in, source);
  tsv::require_header(table, {"probe_id", "gene", "j5", "j3"});
  tsv::require_width(table, 4);

  std::vector<JunctionProbe> probes;
  probes.reserve(table.rows.size());
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f[0].empty() || f[1].empty()) {
      throw ValidationError(
          fmt::format("{}:{}: malformed row: empty probe_id or gene", source, row.line));
    }
    JunctionProbe p{f[0], f[1], tsv::parse_integer(f[2], source, row.line),
                    tsv::parse_integer(f[3], source, row.line)};
    if (p.j5 >= p.j3) {
      throw ValidationError(fmt::format("{}:{}: inverted interval for probe {} (j5={} >= j3={})",
                                        source, row.line, p.probe_id, p.j5, p.j3));
    }
    if (!seen.insert(p.probe_id).second) {
      throw ValidationError(
          fmt::format("{}:{}: duplicate probe_id {}", source, row.line, p.probe_id));
    }
    probes.push_back(std::move(p));
  }
  return probes;
}

std::vector<JunctionProbe> parse_probes(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_probes(in, path.string());
}

std::vector<ArrayChannelAssignment> parse_design(std::istream& in, const std::string& source) {
  const auto table = tsv::read(in, source);
  tsv::require_header(table, {"array_id", "channel", "tissue", "replicate"});
  tsv::require_width(table, 4);

  std::vector<ArrayChannelAssignment> design;
  design.reserve(table.rows.size());
  std::map<std::string, std::vector<std::size_t>> by_array;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f[0].empty() || f[2].empty()) {
      throw ValidationError(
          fmt::format("{}:{}: malformed row: empty array_id or tissue", source, row.line));
    }
    Channel channel;
    try {
      channel = parse_channel(f[1]);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: malformed row: {}", source, row.line, e.what()));
    }
    const auto replicate = tsv::parse_integer(f[3], source, row.line);
    by_array[f[0]].push_back(design.size());
    design.push_back({f[0], channel, f[2], static_cast<int>(replicate)});
  }

  for (const auto& [array, rows] : by_array) {
    if (rows.size() != 2) {
      throw ValidationError(fmt::format(
          "{}: reference design violated: array {} has {} channel rows (expected 2)", source,
          array, rows.size()));
    }
    const auto& a = design[rows[0]];
    const auto& b = design[rows[1]];
    if (a.channel == b.channel) {
      throw ValidationError(fmt::format("{}: array {} lists channel {} twice", source, array,
                                        to_string(a.channel)));
    }
    if (a.tissue == b.tissue) {
      throw ValidationError(fmt::format(
          "{}: reference design violated: array {} carries tissue {} on both channels", source,
          array, a.tissue));
    }
  }
  return design;
}

std::vector<ArrayChannelAssignment> parse_design(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_design(in, path.string());
}

std::vector<std::string> dye_balance_warnings(std::span<const ArrayChannelAssignment> design) {
  std::map<std::string, std::array<std::size_t, 2>> counts;
  for (const auto& row : design) ++counts[row.tissue][static_cast<std::size_t>(row.dye())];
  std::vector<std::string> warnings;
  for (const auto& [tissue, c] : counts) {
    if (c[0] != c[1]) {
      warnings.push_back(fmt::format("dye imbalance: tissue {} labeled Cy3 {} times, Cy5 {} times",
                                     tissue, c[0], c[1]));
    }
  }
  return warnings;
}

std::vector<IntensityRecord> parse_intensities(std::istream& in, const IntensityOptions& options,
                                               const std::string& source) {
  if (!options.already_log && !(options.floor > 0.0 && std::isfinite(options.floor))) {
    throw ValidationError(fmt::format("intensity floor must be positive, got {}", options.floor));
  }
  const auto table = tsv::read(in, source);
  tsv::require_header(table, {"probe_id", "array_id", "channel", "value"});
  tsv::require_width(table, 4);

  std::vector<IntensityRecord> records;
  records.reserve(table.rows.size());
  std::set<std::tuple<std::string, std::string, Channel>> seen;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    Channel channel;
    try {
      channel = parse_channel(f[2]);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: malformed row: {}", source, row.line, e.what()));
    }
    const double raw = tsv::parse_double(f[3], source, row.line);
    if (!std::isfinite(raw)) {
      throw ValidationError(fmt::format("{}:{}: non-finite value `{}`", source, row.line, f[3]));
    }
    const double value = options.already_log ? raw : std::log2(std::max(raw, options.floor));
    if (!seen.emplace(f[0], f[1], channel).second) {
      throw ValidationError(fmt::format("{}:{}: duplicate record for probe {} array {} channel {}",
                                        source, row.line, f[0], f[1], to_string(channel)));
    }
    records.push_back({f[0], f[1], channel, value});
  }
  return records;
}

std::vector<IntensityRecord> parse_intensities(const std::filesystem::path& path,
                                               const IntensityOptions& options) {
  auto in = open_input(path);
  return parse_intensities(in, options, path.string());
}

std::optional<std::size_t> Dataset::probe_index(std::string_view probe_id) const {
  const auto it = probe_lookup_.find(std::string(probe_id));
  if (it == probe_lookup_.end()) return std::nullopt;
  return it->second;
}

std::span<const Dataset::Spot> Dataset::spots(std::size_t probe) const { return spots_.at(probe); }

Dataset validate_dataset(std::vector<JunctionProbe> probes,
                         std::vector<ArrayChannelAssignment> design,
                         std::vector<IntensityRecord> intensities) {
  Dataset ds;

  std::set<std::string> probe_ids;
  for (const auto& p : probes) {
    if (p.j5 >= p.j3) throw ValidationError("inverted interval for probe " + p.probe_id);
    if (!probe_ids.insert(p.probe_id).second) {
      throw ValidationError("duplicate probe_id " + p.probe_id);
    }
  }

  // Arrays are indexed in array_id order.
  std::map<std::string, std::array<std::optional<std::string>, 2>> arrays;
  for (const auto& row : design) {
    auto& slot = arrays[row.array_id][static_cast<std::size_t>(row.channel)];
    if (slot) {
      throw ValidationError(fmt::format("array {} lists channel {} twice", row.array_id,
                                        to_string(row.channel)));
    }
    slot = row.tissue;
  }
  std::set<std::string> tissues;
  std::map<std::string, std::size_t> array_index;
  for (const auto& [id, slots] : arrays) {
    if (!slots[0] || !slots[1]) {
      throw ValidationError(
          fmt::format("reference design violated: array {} lacks a channel row", id));
    }
    if (*slots[0] == *slots[1]) {
      throw ValidationError(fmt::format(
          "reference design violated: array {} carries tissue {} on both channels", id, *slots[0]));
    }
    array_index.emplace(id, ds.array_ids_.size());
    ds.array_ids_.push_back(id);
    ds.array_tissue_.push_back({*slots[0], *slots[1]});
    tissues.insert(*slots[0]);
    tissues.insert(*slots[1]);
  }
  ds.tissues_.assign(tissues.begin(), tissues.end());

  // Probes are indexed in probe_id order so downstream fits see a canonical
  // record ordering regardless of input order.
  std::sort(probes.begin(), probes.end(),
            [](const auto& a, const auto& b) { return a.probe_id < b.probe_id; });
  for (std::size_t i = 0; i < probes.size(); ++i) ds.probe_lookup_.emplace(probes[i].probe_id, i);

  std::set<std::string> unknown_probes;
  std::set<std::string> unknown_arrays;
  // (probe, array) -> values per channel
  std::vector<std::map<std::size_t, std::array<std::optional<double>, 2>>> cells(probes.size());
  for (const auto& rec : intensities) {
    if (!std::isfinite(rec.value)) {
      throw ValidationError(fmt::format("non-finite intensity for probe {} array {}", rec.probe_id,
                                        rec.array_id));
    }
    const auto p = ds.probe_lookup_.find(rec.probe_id);
    const auto a = array_index.find(rec.array_id);
    if (p == ds.probe_lookup_.end()) unknown_probes.insert(rec.probe_id);
    if (a == array_index.end()) unknown_arrays.insert(rec.array_id);
    if (p == ds.probe_lookup_.end() || a == array_index.end()) continue;
    auto& slot = cells[p->second][a->second][static_cast<std::size_t>(rec.channel)];
    if (slot) {
      throw ValidationError(fmt::format("duplicate record for probe {} array {} channel {}",
                                        rec.probe_id, rec.array_id, to_string(rec.channel)));
    }
    slot = rec.value;
  }
  if (!unknown_probes.empty()) {
    throw ValidationError("intensities reference unknown probe_id: " + join_limited(unknown_probes));
  }
  if (!unknown_arrays.empty()) {
    throw ValidationError("intensities reference unknown array_id: " + join_limited(unknown_arrays));
  }

  ds.spots_.resize(probes.size());
  std::size_t spot_count = 0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    for (const auto& [array, values] : cells[p]) {
      if (!values[0] || !values[1]) {
        const auto missing = values[0] ? Channel::Cy5 : Channel::Cy3;
        throw ValidationError(fmt::format("unpaired spot: probe {} on array {} lacks channel {}",
                                          probes[p].probe_id, ds.array_ids_[array],
                                          to_string(missing)));
      }
      ds.spots_[p].push_back({array, {*values[0], *values[1]}});
      ++spot_count;
    }
  }

  std::set<std::string> genes;
  std::set<std::tuple<std::string, std::int64_t, std::int64_t>> junctions;
  for (const auto& p : probes) {
    genes.insert(p.gene);
    junctions.emplace(p.gene, p.j5, p.j3);
  }
  ds.summary_ = {genes.size(),      junctions.size(), probes.size(), ds.array_ids_.size(),
                 spot_count,        intensities.size()};
  ds.warnings_ = dye_balance_warnings(design);

  ds.probes_ = std::move(probes);
  ds.design_ = std::move(design);
  ds.intensities_ = std::move(intensities);
  return ds;
}

void write_probes(std::ostream& out, std::span<const JunctionProbe> probes) {
  out << "probe_id\tgene\tj5\tj3\n";
  for (const auto& p : probes) out << fmt::format("{}\t{}\t{}\t{}\n", p.probe_id, p.gene, p.j5, p.j3);
}

void write_design(std::ostream& out, std::span<const ArrayChannelAssignment> design) {
  out << "array_id\tchannel\ttissue\treplicate\n";
  for (const auto& d : design) {
    out << fmt::format("{}\t{}\t{}\t{}\n", d.array_id, to_string(d.channel), d.tissue, d.replicate);
  }
}

void write_intensities(std::ostream& out, std::span<const IntensityRecord> records) {
  out << "probe_id\tarray_id\tchannel\tvalue\n";
  for (const auto& r : records) {
    out << fmt::format("{}\t{}\t{}\t{}\n", r.probe_id, r.array_id, to_string(r.channel), r.value);
  }
}

}  // namespace rcd
