#include "synkin/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace synkin {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Index>(i);
  }
  raise(errc::missing_channel, "column not found: " + name);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::file_not_found, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) raise(errc::parse_error, "empty file: " + path.string());
  table.header = split_line(line);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      raise(errc::parse_error, path.string() + ": line " + std::to_string(lineno) + " has " +
                                   std::to_string(fields.size()) + " fields, expected " +
                                   std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

double csv_to_double(const std::string& cell, size_t row, const std::string& col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  while (ptr != last && (*ptr == ' ' || *ptr == '\t')) ++ptr;
  if (ec != std::errc() || ptr != last || first == last) {
    raise(errc::parse_error,
          "row " + std::to_string(row) + ", column " + col + ": not a number: '" + cell + "'");
  }
  return value;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) raise(errc::file_not_found, "cannot write " + path.string());
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

TimedMatrix read_timed_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& expected_labels) {
  const CsvTable table = read_csv(path);
  const Index time_col = table.column("time_s");
  const Index n = static_cast<Index>(table.rows.size());
  if (n < 2) raise(errc::parse_error, path.string() + ": need at least 2 samples");

  std::vector<Index> src_cols;
  for (const auto& label : expected_labels) {
    src_cols.push_back(table.column(label));  // raises missing_channel
  }

  TimedMatrix out;
  out.channels = expected_labels;
  out.values.resize(static_cast<Index>(expected_labels.size()), n);
  std::vector<double> time(static_cast<size_t>(n));
  for (Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<size_t>(r)];
    time[static_cast<size_t>(r)] =
        csv_to_double(row[static_cast<size_t>(time_col)], static_cast<size_t>(r) + 1, "time_s");
    for (size_t c = 0; c < src_cols.size(); ++c) {
      const double v = csv_to_double(row[static_cast<size_t>(src_cols[c])],
                                     static_cast<size_t>(r) + 1, expected_labels[c]);
      if (!std::isfinite(v)) {
        raise(errc::non_finite_sample, path.string() + ": non-finite sample at row " +
                                           std::to_string(r + 1) + ", column " +
                                           expected_labels[c]);
      }
      out.values(static_cast<Index>(c), r) = v;
    }
  }

  std::vector<double> dt(static_cast<size_t>(n) - 1);
  for (size_t i = 0; i + 1 < static_cast<size_t>(n); ++i) {
    dt[i] = time[i + 1] - time[i];
    if (!(dt[i] > 0.0)) {
      raise(errc::non_monotonic_time,
            path.string() + ": time_s not strictly increasing at row " + std::to_string(i + 2));
    }
  }
  std::vector<double> sorted = dt;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median_dt = sorted[sorted.size() / 2];
  for (size_t i = 0; i < dt.size(); ++i) {
    if (std::fabs(dt[i] - median_dt) > 0.01 * median_dt) {
      raise(errc::sample_rate_jitter, path.string() + ": sample interval at row " +
                                          std::to_string(i + 2) +
                                          " deviates more than 1% from the median");
    }
  }
  out.sample_rate_hz = 1.0 / median_dt;
  return out;
}

void write_timed_csv(const std::filesystem::path& path, const Matrix& values,
                     double sample_rate_hz, const std::vector<std::string>& channels) {
  if (values.rows() != static_cast<Index>(channels.size())) {
    raise(errc::dimension_mismatch, "write_timed_csv: row/label count mismatch");
  }
  std::vector<std::string> header;
  header.push_back("time_s");
  header.insert(header.end(), channels.begin(), channels.end());
  std::vector<std::vector<std::string>> rows(static_cast<size_t>(values.cols()));
  for (Index t = 0; t < values.cols(); ++t) {
    auto& row = rows[static_cast<size_t>(t)];
    row.reserve(channels.size() + 1);
    row.push_back(format_number(static_cast<double>(t) / sample_rate_hz));
    for (Index c = 0; c < values.rows(); ++c) row.push_back(format_number(values(c, t)));
  }
  write_csv(path, header, rows);
}

}  // namespace synkin
