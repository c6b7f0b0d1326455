#include "run_output.hpp"

#include <array>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include <openssl/evp.h>
#include <unistd.h>

#include <fmt/chrono.h>
#include <fmt/core.h>

#include "rcd/error.hpp"
#include "rcd/version.hpp"

namespace rcd::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(t);
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(secs)));
}

void OutputDir::stage(const std::string& name, std::string contents) { files_[name] = std::move(contents); }

std::vector<std::string> OutputDir::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : files_) out.push_back(name);
  return out;
}

void OutputDir::commit() {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ValidationError(fmt::format("cannot create output directory {}: {}", dir_.string(), ec.message()));

  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged;
  try {
    for (const auto& [name, contents] : files_) {
      const auto final_path = dir_ / name;
      const auto tmp = dir_ / fmt::format(".{}.tmp.{}", name, ::getpid());
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << contents;
      out.close();
      if (!out) throw std::runtime_error(fmt::format("failed writing {}", tmp.string()));
      staged.emplace_back(tmp, final_path);
    }
  } catch (...) {
    for (const auto& [tmp, _] : staged) std::filesystem::remove(tmp, ec);
    throw;
  }
  for (const auto& [tmp, final_path] : staged) std::filesystem::rename(tmp, final_path);
}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path) {
  inputs[role] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
}

std::string Manifest::render(const std::vector<std::string>& outputs) const {
  nlohmann::ordered_json j;
  j["tool"] = "rcd";
  j["version"] = kVersion;
  j["command"] = command;
  j["command_line"] = command_line;
  j["seed"] = seed;
  j["seed_source"] = seed_source;
  j["parameters"] = parameters;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["counts"] = counts;
  j["warnings"] = warnings;
  j["started_utc"] = utc_timestamp(started);
  j["finished_utc"] = utc_timestamp(std::chrono::system_clock::now());
  return j.dump(2) + "\n";
}

}  // namespace rcd::cli
