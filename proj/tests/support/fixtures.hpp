#pragma once

// In-memory datasets shared by the unit and acceptance suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rcd/dataset.hpp"
#include "rcd/junction_sets.hpp"
#include "rcd/mixed_model.hpp"

namespace rcd::testing {

struct RawTables {
  std::vector<JunctionProbe> probes;
  std::vector<ArrayChannelAssignment> design;
  std::vector<IntensityRecord> intensities;

  [[nodiscard]] Dataset validate() const { return validate_dataset(probes, design, intensities); }
};

/// Balanced dye-swap design over `arrays` arrays comparing tissues a and b.
inline std::vector<ArrayChannelAssignment> dye_swap_design(int arrays, const std::string& a = "N",
                                                           const std::string& b = "C") {
  std::vector<ArrayChannelAssignment> d;
  for (int i = 0; i < arrays; ++i) {
    const auto id = "A" + std::to_string(i + 1);
    const bool swap = i % 2 == 1;
    d.push_back({id, Channel::Cy3, swap ? b : a, i / 2 + 1});
    d.push_back({id, Channel::Cy5, swap ? a : b, i / 2 + 1});
  }
  return d;
}

/// One gene whose junctions all overlap; the spot effect is shared by the two
/// channels of a probe on one array. `means[t][j]` with t = 0 for tissue "N".
inline RawTables paired_set(const std::vector<std::vector<double>>& means, int arrays, double spot_sd,
                            double resid_sd, std::uint64_t seed, const std::string& gene = "G1") {
  RawTables raw;
  const auto J = means[0].size();
  for (std::size_t j = 0; j < J; ++j) {
    raw.probes.push_back({gene + "_j" + std::to_string(j + 1), gene, static_cast<std::int64_t>(100 + 10 * j), 500});
  }
  raw.design = dye_swap_design(arrays);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int a = 0; a < arrays; ++a) {
    const auto id = "A" + std::to_string(a + 1);
    const bool swap = a % 2 == 1;
    for (std::size_t j = 0; j < J; ++j) {
      const double spot = spot_sd * n01(rng);
      for (auto ch : {Channel::Cy3, Channel::Cy5}) {
        const bool is_n = (ch == Channel::Cy3) != swap;
        const double mu = means[is_n ? 0 : 1][j];
        raw.intensities.push_back({raw.probes[j].probe_id, id, ch, mu + spot + resid_sd * n01(rng)});
      }
    }
  }
  return raw;
}

inline IncompatibleSet single_set(const Dataset& ds) {
  auto built = build_sets(ds.probes(), 100);
  return built.sets.at(0);
}

}  // namespace rcd::testing
