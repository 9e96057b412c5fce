#pragma once

#include <stdexcept>
#include <string>

namespace synkin {

// Error conditions raised by the library. Grouped by the process exit code the
// CLI maps them to: validation errors (bad arguments or configuration) exit 2,
// data errors (malformed, inconsistent, or degenerate input) exit 3, and
// numerical failures exit 4.
enum class errc {
  // validation (exit 2)
  invalid_argument,
  dimension_mismatch,
  // data (exit 3)
  file_not_found,
  parse_error,
  missing_channel,
  non_finite_sample,
  non_monotonic_time,
  sample_rate_jitter,
  signal_too_short,
  negative_input,
  zero_matrix,
  zero_column,
  no_cycles_detected,
  cycle_count_mismatch,
  missing_condition,
  insufficient_subjects,
  all_differences_zero,
  zero_variance,
  degenerate_groups,
  // numerical (exit 4)
  numerical_failure,
};

// Exception type carrying an errc. The what() string is a human-readable
// message that includes any offending values (row/column indices, counts).
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}

  errc code() const noexcept { return code_; }

  // Process exit code for the CLI: 2 validation, 3 data, 4 numerical.
  int exit_code() const noexcept {
    switch (code_) {
      case errc::invalid_argument:
      case errc::dimension_mismatch:
        return 2;
      case errc::numerical_failure:
        return 4;
      default:
        return 3;
    }
  }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace synkin
