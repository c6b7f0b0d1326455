#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rcd {

enum class Channel : std::uint8_t { Cy3 = 0, Cy5 = 1 };

std::string_view to_string(Channel c) noexcept;
Channel parse_channel(std::string_view text);  // throws ValidationError

/// A splice-junction probe; [j5, j3] is the excised interval in bp.
struct JunctionProbe {
  std::string probe_id;
  std::string gene;
  std::int64_t j5 = 0;
  std::int64_t j3 = 0;

  friend bool operator==(const JunctionProbe&, const JunctionProbe&) = default;
};

/// One channel of one two-color array and the sample hybridized to it.
struct ArrayChannelAssignment {
  std::string array_id;
  Channel channel = Channel::Cy3;
  std::string tissue;
  int replicate = 0;

  /// The dye is the channel; kept for balance diagnostics only.
  [[nodiscard]] Channel dye() const noexcept { return channel; }

  friend bool operator==(const ArrayChannelAssignment&, const ArrayChannelAssignment&) = default;
};

struct IntensityRecord {
  std::string probe_id;
  std::string array_id;
  Channel channel = Channel::Cy3;
  double value = 0.0;  // log2 intensity

  friend bool operator==(const IntensityRecord&, const IntensityRecord&) = default;
};

struct DatasetSummary {
  std::size_t genes = 0;
  std::size_t junctions = 0;  // distinct (gene, j5, j3)
  std::size_t probes = 0;
  std::size_t arrays = 0;
  std::size_t spots = 0;  // (probe, array) pairs
  std::size_t records = 0;
};

std::vector<JunctionProbe> parse_probes(std::istream& in, const std::string& source = "probes");
std::vector<JunctionProbe> parse_probes(const std::filesystem::path& path);

std::vector<ArrayChannelAssignment> parse_design(std::istream& in,
                                                 const std::string& source = "design");
std::vector<ArrayChannelAssignment> parse_design(const std::filesystem::path& path);

/// Non-empty when some tissue is not labeled equally often with each dye.
std::vector<std::string> dye_balance_warnings(std::span<const ArrayChannelAssignment> design);

struct IntensityOptions {
  bool already_log = false;
  double floor = 1.0;  // raw values are clamped to this before log2
};

std::vector<IntensityRecord> parse_intensities(std::istream& in, const IntensityOptions& options,
                                               const std::string& source = "intensities");
std::vector<IntensityRecord> parse_intensities(const std::filesystem::path& path,
                                               const IntensityOptions& options);

/// Validated, indexed, immutable view of the three input tables.
class Dataset {
 public:
  /// Both channel values of one probe on one array.
  struct Spot {
    std::size_t array = 0;
    std::array<double, 2> value{};  // indexed by Channel
  };

  [[nodiscard]] const std::vector<JunctionProbe>& probes() const noexcept { return probes_; }
  [[nodiscard]] const std::vector<ArrayChannelAssignment>& design() const noexcept {
    return design_;
  }
  [[nodiscard]] const std::vector<IntensityRecord>& intensities() const noexcept {
    return intensities_;
  }
  [[nodiscard]] const DatasetSummary& summary() const noexcept { return summary_; }
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Sorted distinct tissue labels.
  [[nodiscard]] const std::vector<std::string>& tissues() const noexcept { return tissues_; }

  [[nodiscard]] std::optional<std::size_t> probe_index(std::string_view probe_id) const;
  [[nodiscard]] std::span<const Spot> spots(std::size_t probe) const;

  [[nodiscard]] std::size_t array_count() const noexcept { return array_ids_.size(); }
  [[nodiscard]] const std::string& array_id(std::size_t array) const { return array_ids_[array]; }
  [[nodiscard]] const std::string& tissue(std::size_t array, Channel channel) const {
    return array_tissue_[array][static_cast<std::size_t>(channel)];
  }

 private:
  friend Dataset validate_dataset(std::vector<JunctionProbe>, std::vector<ArrayChannelAssignment>,
                                  std::vector<IntensityRecord>);

  std::vector<JunctionProbe> probes_;
  std::vector<ArrayChannelAssignment> design_;
  std::vector<IntensityRecord> intensities_;
  DatasetSummary summary_;
  std::vector<std::string> warnings_;
  std::vector<std::string> tissues_;
  std::vector<std::string> array_ids_;
  std::vector<std::array<std::string, 2>> array_tissue_;
  std::unordered_map<std::string, std::size_t> probe_lookup_;
  std::vector<std::vector<Spot>> spots_;
};

/// Checks referential integrity and channel pairing, then builds the index.
Dataset validate_dataset(std::vector<JunctionProbe> probes,
                         std::vector<ArrayChannelAssignment> design,
                         std::vector<IntensityRecord> intensities);

/// Writers producing the same formats the parsers accept (values already log2).
void write_probes(std::ostream& out, std::span<const JunctionProbe> probes);
void write_design(std::ostream& out, std::span<const ArrayChannelAssignment> design);
void write_intensities(std::ostream& out, std::span<const IntensityRecord> records);

}  // namespace rcd
