#include "rws/config.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace rws {

namespace {

const std::vector<std::string> kSubcommands = {
    "sample-exit",    "simulate",    "martingale-test", "counterexample",
    "covariation",    "derivative-rates", "jump-bound",  "all"};

const std::vector<std::string> kFunctionals = {
    "identity", "compensated_square", "bachelier_call", "digital",
    "generic_call"};

// Keys assignable globally; section-assignable keys are the subset below.
const std::set<std::string> kGlobalKeys = {
    "master_seed", "levels",      "T",           "n_paths",
    "functional",  "K",           "mc_inner_count", "out_dir",
    "threads",     "max_steps",   "bins",        "z_threshold",
    "dt",          "grid_tolerance", "dump_paths", "n_draws",
    "cov_target",  "level",       "functionals"};

const std::set<std::string> kSectionKeys = {
    "levels",     "n_paths",   "functional", "K",
    "mc_inner_count", "bins",  "z_threshold", "dt",
    "grid_tolerance", "dump_paths", "n_draws", "cov_target",
    "level",      "functionals"};

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& key, const std::string& what,
                       const std::string& value) {
  throw ConfigError("config: key '" + key + "': " + what + ", got '" + value +
                    "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (v.empty() || v[0] == '-') throw std::invalid_argument("");
    const std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    fail(key, "expected unsigned integer", v);
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    fail(key, "expected real number", v);
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(key, "expected comma-separated integers", v);
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("");
    } catch (...) {
      fail(key, "expected comma-separated integers", v);
    }
  }
  if (out.empty()) fail(key, "expected nonempty integer list", v);
  return out;
}

std::vector<std::string> parse_name_list(const std::string& key,
                                         const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(key, "expected comma-separated names", v);
    out.push_back(item);
  }
  if (out.empty()) fail(key, "expected nonempty name list", v);
  return out;
}

void check_functional(const std::string& key, const std::string& name) {
  if (std::find(kFunctionals.begin(), kFunctionals.end(), name) ==
      kFunctionals.end()) {
    std::string known;
    for (const auto& f : kFunctionals) known += (known.empty() ? "" : ", ") + f;
    fail(key, "unknown functional (known: " + known + ")", name);
  }
}

// Applies one validated key to the typed fields.
void apply(ExperimentConfig& cfg, const std::string& key,
           const std::string& value) {
  if (key == "master_seed") {
    cfg.master_seed = parse_u64(key, value);
  } else if (key == "levels") {
    cfg.levels = parse_int_list(key, value);
    for (int k : cfg.levels)
      if (k < 0) fail(key, "levels must be >= 0", value);
  } else if (key == "T") {
    cfg.horizon = parse_real(key, value);
    if (!(cfg.horizon > 0.0)) fail(key, "expected positive real", value);
  } else if (key == "n_paths") {
    cfg.n_paths = parse_u64(key, value);
    if (cfg.n_paths < 1) fail(key, "expected n_paths >= 1", value);
  } else if (key == "functional") {
    check_functional(key, value);
    cfg.functional = value;
  } else if (key == "K") {
    cfg.strike = parse_real(key, value);
  } else if (key == "mc_inner_count") {
    cfg.mc_inner_count = static_cast<std::uint32_t>(parse_u64(key, value));
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<unsigned>(parse_u64(key, value));
  } else if (key == "max_steps") {
    cfg.max_steps = parse_u64(key, value);
    if (cfg.max_steps < 1) fail(key, "expected max_steps >= 1", value);
  } else if (key == "bins") {
    cfg.bins = static_cast<std::size_t>(parse_u64(key, value));
    if (cfg.bins < 1) fail(key, "expected bins >= 1", value);
  } else if (key == "z_threshold") {
    cfg.z_threshold = parse_real(key, value);
    if (!(cfg.z_threshold > 0.0)) fail(key, "expected positive real", value);
  } else if (key == "dt") {
    cfg.grid_dt = parse_real(key, value);
    if (!(cfg.grid_dt > 0.0)) fail(key, "expected positive real", value);
  } else if (key == "grid_tolerance") {
    cfg.grid_tolerance = parse_real(key, value);
    if (cfg.grid_tolerance < 0.0) fail(key, "expected nonnegative real", value);
  } else if (key == "dump_paths") {
    cfg.dump_paths = static_cast<std::uint32_t>(parse_u64(key, value));
  } else if (key == "n_draws") {
    cfg.n_draws = parse_u64(key, value);
    if (cfg.n_draws < 2) fail(key, "expected n_draws >= 2", value);
  } else if (key == "cov_target") {
    cfg.cov_target = parse_real(key, value);
  } else if (key == "level") {
    const double v = parse_real(key, value);
    const int k = static_cast<int>(v);
    if (v != k || k < 0) fail(key, "expected integer level >= 0", value);
    cfg.level = k;
  } else if (key == "functionals") {
    cfg.functionals = parse_name_list(key, value);
    for (const auto& f : cfg.functionals) check_functional(key, f);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

std::string canonicalize(
    const std::map<std::string, std::string>& globals,
    const std::map<std::string, std::map<std::string, std::string>>&
        sections) {
  std::string out;
  // The echo identifies the experiment; where results land and how many
  // workers ran cannot change a single output byte, so they stay out.
  for (const auto& [k, v] : globals)
    if (k != "out_dir" && k != "threads") out += k + "=" + v + "\n";
  for (const auto& [name, keys] : sections) {
    if (keys.empty()) continue;
    out += "[" + name + "]\n";
    for (const auto& [k, v] : keys) out += k + "=" + v + "\n";
  }
  return out;
}

}  // namespace

const std::vector<std::string>& known_subcommands() { return kSubcommands; }
const std::vector<std::string>& known_functionals() { return kFunctionals; }

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> globals;
  std::map<std::string, std::map<std::string, std::string>> sections;

  std::istringstream in(text);
  std::string line;
  std::string section;  // empty = global scope
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: line " + std::to_string(line_no) +
                          ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section == "global") {
        section.clear();  // explicit return to global scope
        continue;
      }
      if (std::find(kSubcommands.begin(), kSubcommands.end(), section) ==
          kSubcommands.end())
        throw ConfigError("config: line " + std::to_string(line_no) +
                          ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) +
                        ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      if (!kGlobalKeys.count(key))
        throw ConfigError("config: unknown key '" + key + "'");
      globals[key] = value;
    } else {
      if (!kSectionKeys.count(key))
        throw ConfigError("config: key '" + key +
                          "' is not allowed in section [" + section + "]");
      sections[section][key] = value;
    }
  }

  // Required keys first, so an empty file reports them all.
  static const std::vector<std::string> kRequired = {"master_seed", "levels",
                                                     "T", "n_paths",
                                                     "functional"};
  std::string missing;
  for (const auto& k : kRequired)
    if (!globals.count(k)) missing += (missing.empty() ? "" : ", ") + k;
  if (!missing.empty())
    throw ConfigError("config: missing required keys: " + missing);

  ExperimentConfig cfg;
  for (const auto& [k, v] : globals) apply(cfg, k, v);

  // Validate section values eagerly so effective() cannot fail later.
  for (const auto& [name, keys] : sections) {
    ExperimentConfig probe = cfg;
    for (const auto& [k, v] : keys) apply(probe, k, v);
  }

  cfg.sections = sections;
  cfg.canonical_text = canonicalize(globals, sections);
  return cfg;
}

ExperimentConfig ExperimentConfig::effective(
    const std::string& subcommand) const {
  ExperimentConfig out = *this;
  const auto it = sections.find(subcommand);
  if (it != sections.end())
    for (const auto& [k, v] : it->second) apply(out, k, v);
  return out;
}

}  // namespace rws
