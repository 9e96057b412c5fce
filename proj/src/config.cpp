#include "synkin/config.hpp"

#include <charconv>
#include <fstream>

#include "synkin/error.hpp"

namespace synkin {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      // band-pass filtering of raw EMG
      {"filter.low_hz", "30"},
      {"filter.high_hz", "80"},
      {"filter.order", "4"},
      // envelope extraction
      {"envelope.smooth_samples", "250"},
      // Welch spectral estimates
      {"psd.segment_len", "1024"},
      {"psd.overlap", "0.5"},
      // whole-trial amplitude/spectral metrics: "raw" or "filtered" input
      {"fatigue.source", "raw"},
      // non-negative factorization
      {"nnmf.restarts", "20"},
      {"nnmf.tol", "1e-6"},
      {"nnmf.max_iter", "1000"},
      {"nnmf.seed", "1"},
      {"nnmf.vaf_threshold", "0.90"},
      {"nnmf.growth_threshold", "0.03"},
      {"nnmf.max_rank", "8"},
      // envelope decimation factor applied before factorization
      {"nnmf.downsample", "40"},
      // kinematics
      {"kin.smooth_window_frac", "0.01"},
      {"kin.ell", "101"},
      {"kin.interp", "spline"},
      {"kin.peak_prominence_deg", "10"},
      {"kin.cycle_period_s", "4"},
      {"kin.expected_cycles", "5"},
      // compensation detection thresholds
      {"detect.rms_increase_pct", "50"},
      {"detect.rom_increase_deg", "10"},
      // study layout; empty subjects list means "discover subject_* dirs"
      {"study.data_root", "."},
      {"study.output_dir", "out"},
      {"study.subjects", ""},
      {"study.conditions", "WeightFree,Standard,Fatigue"},
      {"study.reference_condition", "Standard"},
      // synthetic data generation
      {"synth.scenario", "default"},
      {"synth.n_subjects", "12"},
      {"synth.seed", "1"},
      {"synth.snr_db", "20"},
      // paired comparison for the stats subcommand
      {"stats.condition_a", "Standard"},
      {"stats.condition_b", "Fatigue"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

Config::Config() : values_(default_values()) {}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::file_not_found, "cannot open config " + path.string());
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      raise(errc::invalid_argument,
            path.string() + ": line " + std::to_string(lineno) + ": expected key = value");
    }
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known(key)) raise(errc::invalid_argument, "unknown config key: " + key);
  values_[key] = value;
}

bool Config::is_known(const std::string& key) const {
  return default_values().count(key) != 0;
}

const std::string& Config::get_str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) raise(errc::invalid_argument, "unknown config key: " + key);
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string& s = get_str(key);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    raise(errc::invalid_argument, "config " + key + ": not a number: '" + s + "'");
  }
  return value;
}

int Config::get_int(const std::string& key) const {
  const std::string& s = get_str(key);
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    raise(errc::invalid_argument, "config " + key + ": not an integer: '" + s + "'");
  }
  return value;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& s = get_str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  raise(errc::invalid_argument, "config " + key + ": not a boolean: '" + s + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  const std::string& s = get_str(key);
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace synkin
