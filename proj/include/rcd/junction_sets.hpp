#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rcd/dataset.hpp"

namespace rcd {

/// Probes with identical (gene, j5, j3) interrogate one junction; the
/// junction is named after its smallest probe_id.
struct Junction {
  std::string id;
  std::string gene;
  std::int64_t j5 = 0;
  std::int64_t j3 = 0;
  std::vector<std::string> probe_ids;  // sorted
};

/// Junctions grouped from probes, sorted by (gene, j5, j3, id).
std::vector<Junction> group_junctions(std::span<const JunctionProbe> probes);

/// Closed-interval intersection test. Throws std::invalid_argument when the
/// genes differ: junctions of different genes are never compared.
bool intervals_incompatible(const JunctionProbe& a, const JunctionProbe& b);
bool intervals_incompatible(const Junction& a, const Junction& b);

/// O_j for an anchor junction j: every junction of the same gene whose
/// interval intersects j's, including j itself.
struct IncompatibleSet {
  std::string set_id;
  std::string gene;
  std::string anchor;
  std::vector<Junction> members;  // sorted by (j5, j3, id)

  [[nodiscard]] std::size_t size() const noexcept { return members.size(); }
};

struct SetExclusion {
  std::string gene;
  std::string anchor;
  std::size_t size = 0;
};

struct SetBuildResult {
  std::vector<IncompatibleSet> sets;
  std::vector<SetExclusion> excluded;  // one per anchor whose set exceeds max_size
  std::size_t singletons = 0;          // anchors with no incompatible partner
  std::size_t duplicates = 0;          // anchors whose member list repeated an earlier set
  std::map<std::size_t, std::size_t> size_histogram;  // over retained sets
};

/// Stable 16-hex-digit identifier from the gene and sorted member ids.
std::string make_set_id(const std::string& gene, std::span<const Junction> members);

SetBuildResult build_sets(std::span<const JunctionProbe> probes, std::size_t max_size = 10);

/// `set_id  gene  anchor_probe  member_probes` with comma-joined members.
void write_sets_tsv(std::ostream& out, std::span<const IncompatibleSet> sets);

}  // namespace rcd
