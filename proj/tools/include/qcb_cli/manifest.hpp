#pragma once

// Experiment manifests: what ran, with which resolved config, on which inputs,
// producing which outputs.

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace qcb::cli {

struct FileRecord {
  std::string path;  ///< relative to the manifest's directory
  std::string sha256;
};

struct ExperimentManifest {
  std::string command;
  nlohmann::json config;  ///< every option after defaults; paths relative to the manifest
  std::uint64_t seed = 0;
  std::string version;
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;
  double wall_clock_seconds = 0.0;
  unsigned threads = 1;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

nlohmann::json manifest_to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const nlohmann::json& j);

/// "out/result.json" -> "out/result.manifest.json".
std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output);

}  // namespace qcb::cli
