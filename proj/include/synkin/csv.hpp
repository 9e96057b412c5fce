#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "synkin/types.hpp"

namespace synkin {

// A parsed CSV file: one header row plus string cells. Every row is checked
// to have exactly header.size() fields at parse time.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Index column(const std::string& name) const;  // raises missing_channel if absent
};

// Reads a comma-separated file with a mandatory header row. Raises
// file_not_found or parse_error (ragged rows, empty file).
CsvTable read_csv(const std::filesystem::path& path);

// Parses a cell as double; raises parse_error naming row and column on
// failure. row is the 1-based data row for messages.
double csv_to_double(const std::string& cell, size_t row, const std::string& col);

// Writes rows of preformatted cells; creates parent directories as needed.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Formats a double for CSV/JSON output: shortest form at 12 significant
// digits, bit-stable across runs.
std::string format_number(double v);

// Reads/writes a channels-by-time matrix with a leading time_s column.
// Writing emits time as sample_index / sample_rate. Reading validates a
// strictly increasing time column, finite samples (raises non_finite_sample
// with row and column), per-step jitter within 1% of the median step (raises
// sample_rate_jitter), and reorders rows to expected_labels (raises
// missing_channel). Extra columns are ignored.
struct TimedMatrix {
  Matrix values;  // channels x time
  double sample_rate_hz = 0.0;
  std::vector<std::string> channels;
};

TimedMatrix read_timed_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& expected_labels);
void write_timed_csv(const std::filesystem::path& path, const Matrix& values,
                     double sample_rate_hz, const std::vector<std::string>& channels);

}  // namespace synkin
