#pragma once

#include <filesystem>

#include "synkin/config.hpp"
#include "synkin/types.hpp"

namespace synkin {

// Band-pass design parameters. order is the analog prototype order; the
// realized digital band-pass has 2*order poles.
struct BandpassConfig {
  double low_hz = 30.0;
  double high_hz = 80.0;
  int order = 4;
};

struct EnvelopeConfig {
  int smooth_samples = 250;  // centered moving-mean width, truncated at edges
};

struct PsdConfig {
  int segment_len = 1024;
  double overlap = 0.5;  // fraction of segment_len
};

BandpassConfig bandpass_config(const Config& cfg);
EnvelopeConfig envelope_config(const Config& cfg);
PsdConfig psd_config(const Config& cfg);

// Digital IIR transfer function, b over a, a[0] normalized to 1.
struct FilterCoeffs {
  std::vector<double> b;
  std::vector<double> a;
};

// Butterworth band-pass design via the bilinear transform with frequency
// prewarping; gain is normalized to exactly 1 at the warped center frequency
// sqrt(low*high). Raises invalid_argument unless 0 < low < high < fs/2.
FilterCoeffs butter_bandpass(int order, double low_hz, double high_hz, double fs);

// Steady-state initial filter state for a unit step input, used to suppress
// startup transients in filtfilt.
Vector lfilter_zi(const FilterCoeffs& f);

// Direct-form II transposed filtering with initial state zi (may be empty).
Vector lfilter(const FilterCoeffs& f, const Vector& x, const Vector& zi);

// Forward-backward (zero-phase) filtering. The input is extended on both
// ends by an odd reflection of 3x the digital filter order before filtering;
// raises signal_too_short when the input is not longer than the extension.
Vector filtfilt(const FilterCoeffs& f, const Vector& x);

// Applies the configured band-pass to every channel, zero-phase.
EmgRecording bandpass_filter(const EmgRecording& rec, const BandpassConfig& cfg);

// Magnitude of the analytic signal (frequency-domain Hilbert transform).
Vector analytic_magnitude(const Vector& x);

// Centered moving mean with window truncation at the edges; window >= 1.
Vector moving_mean(const Vector& x, int window);

// Per-channel activity envelope: analytic-signal magnitude followed by a
// moving mean. Output is non-negative with the same shape as the input.
EnvelopeMatrix extract_envelope(const EmgRecording& filtered, const EnvelopeConfig& cfg);

// Root-mean-square amplitude.
double rms_amplitude(const Vector& x);
Vector rms_per_channel(const Matrix& channels);

// One-sided Welch power spectral density (Hann window, mean over segments).
// Requires x.size() >= 2 * segment_len, else raises signal_too_short.
struct Psd {
  Vector freq_hz;
  Vector power;
};
Psd welch_psd(const Vector& x, double fs, const PsdConfig& cfg);

// Frequency below which half of the total Welch PSD power lies, interpolated
// linearly between bin centers; accurate to about one bin width (fs/segment_len).
double median_frequency(const Vector& x, double fs, const PsdConfig& cfg);
Vector median_frequency_per_channel(const Matrix& channels, double fs, const PsdConfig& cfg);

// Whole-trial amplitude and spectral metrics for every channel of a recording.
FatigueMetrics compute_fatigue_metrics(const EmgRecording& rec, const PsdConfig& cfg);

// Percent change of RMS and median frequency from a reference recording's
// metrics to a test recording's (e.g. Standard vs Fatigue). Channels must
// match; raises zero_variance if a reference entry is zero.
FatigueChange fatigue_comparison(const FatigueMetrics& reference, const FatigueMetrics& test);

// Reads an EMG CSV (time_s column plus one column per expected label, any
// order) and returns channels in canonical order. Validation as in
// read_timed_csv.
EmgRecording ingest_emg_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& expected_labels);

}  // namespace synkin
