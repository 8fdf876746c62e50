#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace amde {

// Flat key = value configuration with [section] headers; section names
// prefix the keys ("[scene]" + "seed = 7" -> "scene.seed"). Every key must
// exist in the built-in registry; unknown keys are rejected with the list
// of valid keys. Later assignments win, so command-line overrides are
// applied after the file.
class Config {
 public:
  Config() = default;

  void load_file(const std::string& path);
  void load_text(const std::string& text, const std::string& origin = "<text>");
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // One line per key: name, default, description. Backs --help.
  static std::string describe_keys();
  static std::vector<std::string> key_names();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace amde
