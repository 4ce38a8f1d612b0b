#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dqsg {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

// Written next to the outputs of every run. Identical (config, seed) runs
// produce manifests that differ only in wall_time_seconds.
struct RunManifest {
  std::string config_digest;  // sha256 of canonical_text(config)
  std::string tool_version{kToolVersion};
  std::string experiment;
  std::uint64_t seed = 0;
  double wall_time_seconds = 0.0;
  std::vector<ManifestFile> files;
};

// Hashes each listed file (paths relative to `dir`).
RunManifest make_manifest(const std::filesystem::path& dir,
                          const std::vector<std::string>& relative_files);
std::string manifest_json(const RunManifest& m);  // sorted keys, trailing newline
void write_manifest(const std::filesystem::path& path, const RunManifest& m);

}  // namespace dqsg
