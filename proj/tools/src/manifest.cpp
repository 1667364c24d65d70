#include "qcb_cli/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "qcb/errors.hpp"

namespace qcb::cli {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

namespace {

nlohmann::json records_to_json(const std::vector<FileRecord>& rs) {
  auto a = nlohmann::json::array();
  for (const auto& r : rs) a.push_back({{"path", r.path}, {"sha256", r.sha256}});
  return a;
}

std::vector<FileRecord> records_from_json(const nlohmann::json& j) {
  std::vector<FileRecord> rs;
  for (const auto& r : j) rs.push_back({r.at("path").get<std::string>(), r.at("sha256").get<std::string>()});
  return rs;
}

}  // namespace

nlohmann::json manifest_to_json(const ExperimentManifest& m) {
  return {{"format", "qcb-lab-manifest/1"},
          {"command", m.command},
          {"config", m.config},
          {"seed", m.seed},
          {"version", m.version},
          {"inputs", records_to_json(m.inputs)},
          {"outputs", records_to_json(m.outputs)},
          {"wall_clock_seconds", m.wall_clock_seconds},
          {"threads", m.threads}};
}

ExperimentManifest manifest_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.value("format", "") == "qcb-lab-manifest/1", "not a qcb-lab manifest");
  ExperimentManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seed = j.value("seed", std::uint64_t{0});
    m.version = j.value("version", "");
    m.inputs = records_from_json(j.value("inputs", nlohmann::json::array()));
    m.outputs = records_from_json(j.at("outputs"));
    m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    m.threads = j.value("threads", 1u);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output) {
  auto p = primary_output;
  return p.replace_extension().string() + ".manifest.json";
}

}  // namespace qcb::cli
