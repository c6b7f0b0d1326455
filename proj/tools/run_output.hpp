#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace rcd::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::string utc_timestamp(std::chrono::system_clock::time_point t);

/// Output files staged in memory and committed together. Each file is
/// written to a temporary sibling and renamed into place, so a failed run
/// leaves no partial tables behind.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void stage(const std::string& name, std::string contents);
  void commit();

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return dir_; }
  [[nodiscard]] std::vector<std::string> names() const;

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

struct Manifest {
  std::string command;
  std::string command_line;
  std::uint64_t seed = 0;
  std::string seed_source;  // "flag" or "entropy"
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  std::vector<std::string> warnings;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  void add_input(const std::string& role, const std::filesystem::path& path);
  [[nodiscard]] std::string render(const std::vector<std::string>& outputs) const;
};

}  // namespace rcd::cli
