#include "qcb_cli/app.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <algorithm>
#include <chrono>
#include <map>

#include "commands.hpp"
#include "io.hpp"
#include "qcb/errors.hpp"
#include "qcb/parallel.hpp"
#include "qcb_cli/manifest.hpp"

namespace qcb::cli {

namespace {

std::string flag_of(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

/// Typed by the default: numbers and booleans are parsed, strings kept, and
/// untyped values read as JSON, then as a comma list of numbers, then as text.
json typed_value(const std::string& text, const json& dflt) {
  try {
    if (dflt.is_boolean()) {
      if (text == "true" || text == "1" || text == "on") return true;
      if (text == "false" || text == "0" || text == "off") return false;
      throw ValidationError("expected true or false, got " + text);
    }
    if (dflt.is_number_integer()) return std::stoll(text);
    if (dflt.is_number()) return std::stod(text);
    if (dflt.is_string() && (text.empty() || (text.front() != '{' && text.front() != '['))) return text;
  } catch (const std::logic_error&) {
    throw ValidationError("bad value: " + text);
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
  }
  if (text.find(',') != std::string::npos) {
    json a = json::array();
    std::stringstream ss(text);
    std::string item;
    try {
      while (std::getline(ss, item, ',')) a.push_back(std::stod(item));
      return a;
    } catch (const std::logic_error&) {
    }
  }
  return text;
}

struct Pending {
  const CommandDesc* desc = nullptr;
  std::map<std::string, std::string> given;
  std::string config_file;
};

json resolve(const Pending& p) {
  json cfg = json::object();
  for (const auto& o : p.desc->options) cfg[o.key] = o.dflt;
  if (!p.config_file.empty()) {
    const json file = read_json(p.config_file);
    require(file.is_object(), "config file must hold a JSON object");
    for (const auto& [k, v] : file.items()) {
      require(cfg.contains(k), "unknown config key '" + k + "' for " + p.desc->name);
      cfg[k] = v;
    }
  }
  for (const auto& o : p.desc->options)
    if (auto it = p.given.find(o.key); it != p.given.end()) cfg[o.key] = typed_value(it->second, o.dflt);
  for (const auto& o : p.desc->options)
    require(!o.required || !cfg[o.key].is_null(), flag_of(o.key) + " is required");
  return cfg;
}

bool is_input_file(const json& v) { return v.is_string() && fs::is_regular_file(v.get<std::string>()); }

std::string relative_to(const fs::path& p, const fs::path& dir) {
  return fs::relative(fs::absolute(p), dir).generic_string();
}

/// Runs a resolved command and writes its manifest beside the primary output.
int perform(const std::string& command, const json& cfg, std::ostream& out) {
  const CommandDesc& desc = find_command(command);
  const auto t0 = std::chrono::steady_clock::now();
  const Execution ex = execute(command, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path mpath = manifest_path_for(cfg.at("out").get<std::string>());
  const fs::path mdir = fs::absolute(mpath).parent_path();
  ExperimentManifest m;
  m.command = command;
  m.config = cfg;
  for (const auto& key : desc.input_keys)
    if (is_input_file(cfg.at(key))) {
      const std::string path = cfg.at(key).get<std::string>();
      m.config[key] = relative_to(path, mdir);
      m.inputs.push_back({relative_to(path, mdir), sha256_file(path)});
    }
  m.config["out"] = relative_to(cfg.at("out").get<std::string>(), mdir);
  m.seed = cfg.value("seed", std::uint64_t{0});
  m.version = QCB_VERSION;
  for (const auto& o : ex.outputs) m.outputs.push_back({relative_to(o, mdir), sha256_file(o)});
  m.wall_clock_seconds = secs;
  m.threads = worker_count();
  write_json(mpath, manifest_to_json(m));

  out << ex.summary << "\n";
  for (const auto& o : ex.outputs) out << "wrote " << o.generic_string() << "\n";
  out << "manifest " << mpath.generic_string() << "\n";
  if (ex.nonconvergence) {
    out << "nonconvergence: a line search stalled before the step tolerance\n";
    return kNonconvergence;
  }
  return kOk;
}

int repro(const fs::path& manifest_path, const std::string& out_dir_opt, std::ostream& out) {
  const ExperimentManifest m = manifest_from_json(read_json(manifest_path));
  const CommandDesc& desc = find_command(m.command);
  const fs::path mdir = fs::absolute(manifest_path).parent_path();
  for (const auto& in : m.inputs)
    require(sha256_file(mdir / in.path) == in.sha256, "input " + in.path + " does not match its recorded hash");

  const fs::path out_dir = out_dir_opt.empty()
                               ? fs::temp_directory_path() / "qcb-repro" / manifest_path.stem()
                               : fs::path(out_dir_opt);
  json cfg = m.config;
  for (const auto& key : desc.input_keys)
    if (cfg.contains(key) && cfg.at(key).is_string() && fs::is_regular_file(mdir / cfg.at(key).get<std::string>()))
      cfg[key] = (mdir / cfg.at(key).get<std::string>()).generic_string();
  cfg["out"] = (out_dir / cfg.at("out").get<std::string>()).generic_string();
  const int rc = perform(m.command, cfg, out);
  if (rc != kOk && rc != kNonconvergence) return rc;

  bool all = true;
  for (const auto& o : m.outputs) {
    const fs::path fresh = out_dir / o.path;
    const bool same = fs::is_regular_file(fresh) && sha256_file(fresh) == o.sha256;
    all = all && same;
    out << (same ? "match    " : "MISMATCH ") << o.path << "\n";
  }
  return all ? kOk : kMismatch;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qcb-lab: boundary quasiconvexity and DiPerna-Majda measure experiments", "qcb-lab"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(QCB_VERSION));

  std::vector<Pending> pending(command_table().size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < command_table().size(); ++i) {
    const CommandDesc& d = command_table()[i];
    pending[i].desc = &d;
    CLI::App* sub = app.add_subcommand(d.name, d.help);
    for (const auto& o : d.options) {
      std::string help = o.help;
      if (!o.dflt.is_null()) help += " [" + (o.dflt.is_string() ? o.dflt.get<std::string>() : o.dflt.dump()) + "]";
      sub->add_option(flag_of(o.key), pending[i].given[o.key], help);
    }
    sub->add_option("--config", pending[i].config_file, "JSON object of option values (flags take precedence)");
    subs.push_back(sub);
  }
  std::string manifest_path, out_dir;
  CLI::App* rep = app.add_subcommand("repro", "Re-run a manifest and compare output hashes");
  rep->add_option("manifest", manifest_path, "manifest JSON")->required();
  rep->add_option("--out-dir", out_dir, "directory for the regenerated outputs [temp dir]");

  std::vector<const char*> argv{"qcb-lab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (rep->parsed()) return repro(manifest_path, out_dir, out);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      Pending& p = pending[i];
      // CLI11 leaves unset string options empty; only explicit flags count.
      for (auto it = p.given.begin(); it != p.given.end();)
        it = subs[i]->get_option(flag_of(it->first))->count() == 0 ? p.given.erase(it) : std::next(it);
      return perform(p.desc->name, resolve(p), out);
    }
  } catch (const NonconvergenceError& e) {
    err << "nonconvergence: " << e.what() << "\n";
    return kNonconvergence;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  }
  return kUsage;
}

}  // namespace qcb::cli
