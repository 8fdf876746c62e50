#include "amde/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "amde/errors.hpp"

namespace amde {

namespace {

struct KeyInfo {
  const char* name;
  const char* def;
  const char* description;
};

// The single source of truth for configuration keys.
const KeyInfo kRegistry[] = {
    {"scene.height", "128", "frame height in pixels (multiple of 32)"},
    {"scene.width", "128", "frame width in pixels (multiple of 32)"},
    {"scene.seed", "1", "master seed; identical seeds reproduce runs bit-exactly"},
    {"scene.drift_x", "1", "camera drift in px/frame along x (wraps around)"},
    {"scene.drift_y", "0", "camera drift in px/frame along y (wraps around)"},
    {"scene.object_count", "2", "number of moving foreground rectangles"},
    {"scene.object_size", "24", "side length of each foreground rectangle, px"},
    {"scene.object_speed", "1.5", "object speed relative to the background, px/frame"},
    {"scene.sigma_foundation", "0.004", "noise sigma of the foundation feature stream"},
    {"scene.sigma_encoder", "0.09",
     "noise sigma of the encoder feature stream (must exceed the foundation sigma)"},
    {"scene.channels", "8", "feature/memory channel count (>= 3)"},
    {"pipeline.gate_temperature", "4.0", "temperature k of the semantic gate"},
    {"pipeline.smoothing_beta", "0.5", "trust smoothing factor in (0,1]"},
    {"pipeline.trust_mode", "reference",
     "trust source: reference | conv | override"},
    {"pipeline.refmod_a", "4.5", "reference modulator offset a"},
    {"pipeline.refmod_b", "19", "reference modulator distance weight b"},
    {"pipeline.trust_override", "0.0",
     "constant trust in [0,1] used when trust_mode = override"},
    {"pipeline.fastpath_threshold", "0.5",
     "trust cutoff below which a pixel counts as encoder-dominated"},
    {"pipeline.h1_weights", "",
     "tensor file with layer-1 gating conv weights (trust_mode = conv)"},
    {"pipeline.h4_weights", "",
     "tensor file with layer-4 gating conv weights (trust_mode = conv)"},
    {"pipeline.level_weights", "0.4,0.3,0.2,0.1",
     "decoder per-level readout weights, must sum to 1"},
    {"run.mode", "sync-replay", "execution mode: sync-replay | async"},
    {"run.frames", "80", "sequence length when generating on the fly"},
    {"run.refresh_interval", "10", "refresh interval N in frames (sync mode)"},
    {"run.slow_latency_ms", "16.6", "simulated slow-path latency (async mode)"},
    {"run.fast_latency_ms", "4.2", "simulated fast-path latency (async mode)"},
    {"run.virtual_clock", "true",
     "use the deterministic virtual clock for async runs"},
    {"run.slow_stall_after", "-1",
     "stop slow-path publishes after this many (excluding init); -1 = never"},
    {"run.sequence_dir", "",
     "replay an exported sequence directory instead of generating"},
    {"run.compute_metrics", "true", "evaluate aligned depth metrics per frame"},
    {"sweep.seed_count", "20", "number of seeds for the lag sweep"},
    {"sweep.base_seed", "1", "first seed of the sweep; seeds are consecutive"},
    {"bench.iterations", "100000", "cache reads performed by the benchmark"},
    {"bench.publishes", "10000", "cache publishes performed by the benchmark"},
    {"bench.channels", "2", "channel count of the benchmark payload"},
    {"bench.size", "8", "layer-1 side length of the benchmark payload"},
    {"bench.concurrent", "true",
     "run writer and reader on separate threads (false = interleaved)"},
};

const KeyInfo* find_key(const std::string& key) {
  for (const KeyInfo& info : kRegistry) {
    if (key == info.name) return &info;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void unknown_key(const std::string& key) {
  std::string msg = "unknown config key '" + key + "'; valid keys are:";
  for (const KeyInfo& info : kRegistry) {
    msg += "\n  ";
    msg += info.name;
  }
  throw ConfigError(msg);
}

}  // namespace

void Config::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open " + path);
  std::stringstream buffer;
  buffer << is.rdbuf();
  load_text(buffer.str(), path);
}

void Config::load_text(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    set(key, value);
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) unknown_key(key);
  values_[key] = value;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const KeyInfo* info = find_key(key);
  if (!info) unknown_key(key);
  return info->def;
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t Config::get_uint(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || s.find('-') != std::string::npos) {
    throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" +
                      s + "'");
  }
  return v;
}

double Config::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key) const {
  std::string s = get_string(key);
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + s + "'");
}

std::string Config::describe_keys() {
  std::string out;
  for (const KeyInfo& info : kRegistry) {
    out += info.name;
    out += " (default: ";
    out += info.def[0] ? info.def : "<empty>";
    out += ") - ";
    out += info.description;
    out += "\n";
  }
  return out;
}

std::vector<std::string> Config::key_names() {
  std::vector<std::string> names;
  for (const KeyInfo& info : kRegistry) names.push_back(info.name);
  return names;
}

}  // namespace amde
