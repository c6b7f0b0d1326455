#include "rcd/junction_sets.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include <fmt/core.h>

#include "rcd/random.hpp"

namespace rcd {
namespace {

bool closed_intersect(std::int64_t a5, std::int64_t a3, std::int64_t b5, std::int64_t b3) {
  return a5 <= b3 && b5 <= a3;
}

}  // namespace

std::vector<Junction> group_junctions(std::span<const JunctionProbe> probes) {
  std::map<std::tuple<std::string, std::int64_t, std::int64_t>, std::vector<std::string>> groups;
  for (const auto& p : probes) groups[{p.gene, p.j5, p.j3}].push_back(p.probe_id);

  std::vector<Junction> out;
  out.reserve(groups.size());
  for (auto& [key, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    out.push_back({ids.front(), std::get<0>(key), std::get<1>(key), std::get<2>(key), ids});
  }
  return out;
}

bool intervals_incompatible(const JunctionProbe& a, const JunctionProbe& b) {
  if (a.gene != b.gene) {
    throw std::invalid_argument(fmt::format("cannot compare junctions of different genes ({} vs {})",
                                            a.gene, b.gene));
  }
  return closed_intersect(a.j5, a.j3, b.j5, b.j3);
}

bool intervals_incompatible(const Junction& a, const Junction& b) {
  if (a.gene != b.gene) {
    throw std::invalid_argument(fmt::format("cannot compare junctions of different genes ({} vs {})",
                                            a.gene, b.gene));
  }
  return closed_intersect(a.j5, a.j3, b.j5, b.j3);
}

std::string make_set_id(const std::string& gene, std::span<const Junction> members) {
  std::vector<std::string> ids;
  ids.reserve(members.size());
  for (const auto& m : members) ids.push_back(m.id);
  std::sort(ids.begin(), ids.end());
  auto h = fnv1a64(gene);
  for (const auto& id : ids) {
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(id, h);
  }
  return fmt::format("{:016x}", h);
}

SetBuildResult build_sets(std::span<const JunctionProbe> probes, std::size_t max_size) {
  const auto junctions = group_junctions(probes);
  SetBuildResult result;
  std::set<std::vector<std::string>> seen;

  // group_junctions sorts by gene first, so each gene is a contiguous block.
  for (std::size_t begin = 0; begin < junctions.size();) {
    std::size_t end = begin;
    while (end < junctions.size() && junctions[end].gene == junctions[begin].gene) ++end;

    for (std::size_t a = begin; a < end; ++a) {
      const auto& anchor = junctions[a];
      std::vector<Junction> members;
      for (std::size_t b = begin; b < end; ++b) {
        if (intervals_incompatible(anchor, junctions[b])) members.push_back(junctions[b]);
      }
      if (members.size() < 2) {
        ++result.singletons;
        continue;
      }
      if (members.size() > max_size) {
        result.excluded.push_back({anchor.gene, anchor.id, members.size()});
        continue;
      }
      std::vector<std::string> key;
      for (const auto& m : members) key.push_back(m.id);
      if (!seen.insert(key).second) {
        ++result.duplicates;
        continue;
      }
      ++result.size_histogram[members.size()];
      auto id = make_set_id(anchor.gene, members);
      result.sets.push_back({std::move(id), anchor.gene, anchor.id, std::move(members)});
    }
    begin = end;
  }
  return result;
}

void write_sets_tsv(std::ostream& out, std::span<const IncompatibleSet> sets) {
  out << "set_id\tgene\tanchor_probe\tmember_probes\n";
  for (const auto& s : sets) {
    std::string members;
    for (const auto& m : s.members) members += (members.empty() ? "" : ",") + m.id;
    out << fmt::format("{}\t{}\t{}\t{}\n", s.set_id, s.gene, s.anchor, members);
  }
}

}  // namespace rcd
