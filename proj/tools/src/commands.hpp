#pragma once

// Subcommand table and execution from a fully resolved JSON config.

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace qcb::cli {

struct OptionDesc {
  std::string key;  ///< config key; the flag is --key with '_' -> '-'
  std::string help;
  nlohmann::json dflt;  ///< null: no default (required when `required`)
  bool required = false;
};

struct CommandDesc {
  std::string name;
  std::string help;
  std::vector<OptionDesc> options;
  /// Keys whose string value names an input file (if such a file exists).
  std::vector<std::string> input_keys;
};

/// Every subcommand except repro; each has an "out" option naming the primary output.
const std::vector<CommandDesc>& command_table();
const CommandDesc& find_command(const std::string& name);

struct Execution {
  std::vector<std::filesystem::path> outputs;  ///< primary output first
  bool nonconvergence = false;
  std::string summary;
};

Execution execute(const std::string& command, const nlohmann::json& config);

}  // namespace qcb::cli
