#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace synkin {

// Flat configuration with dotted keys ("filter.low_hz"). Every key has a
// built-in default; load_file and set reject keys that are not known, which
// catches typos early. Values are stored as strings and converted on access.
class Config {
 public:
  Config();  // defaults only

  // Parses "key = value" lines; '#' starts a comment, blank lines ignored.
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  bool is_known(const std::string& key) const;
  const std::string& get_str(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  // Comma-separated list value, trimmed; empty string yields empty list.
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace synkin
