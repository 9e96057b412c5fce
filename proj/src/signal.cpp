#include "synkin/signal.hpp"

#include "synkin/csv.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace synkin {

namespace {

using cd = std::complex<double>;
constexpr double pi = std::numbers::pi;

// Expands a polynomial from its roots; coefficients come out real because
// complex roots arrive in conjugate pairs.
std::vector<double> poly_from_roots(const std::vector<cd>& roots) {
  std::vector<cd> coeffs = {cd(1.0, 0.0)};
  for (const cd& r : roots) {
    std::vector<cd> next(coeffs.size() + 1, cd(0.0, 0.0));
    for (size_t i = 0; i < coeffs.size(); ++i) {
      next[i] += coeffs[i];
      next[i + 1] -= coeffs[i] * r;
    }
    coeffs = std::move(next);
  }
  std::vector<double> out(coeffs.size());
  for (size_t i = 0; i < coeffs.size(); ++i) out[i] = coeffs[i].real();
  return out;
}

}  // namespace

BandpassConfig bandpass_config(const Config& cfg) {
  return {cfg.get_double("filter.low_hz"), cfg.get_double("filter.high_hz"),
          cfg.get_int("filter.order")};
}

EnvelopeConfig envelope_config(const Config& cfg) {
  return {cfg.get_int("envelope.smooth_samples")};
}

PsdConfig psd_config(const Config& cfg) {
  return {cfg.get_int("psd.segment_len"), cfg.get_double("psd.overlap")};
}

FilterCoeffs butter_bandpass(int order, double low_hz, double high_hz, double fs) {
  if (order < 1 || order > 12) {
    raise(errc::invalid_argument, "butter_bandpass: order must be in [1, 12]");
  }
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0)) {
    raise(errc::invalid_argument, "butter_bandpass: need 0 < low < high < fs/2");
  }
  const double fs2 = 2.0 * fs;
  // prewarped analog band edges and center
  const double wl = fs2 * std::tan(pi * low_hz / fs);
  const double wh = fs2 * std::tan(pi * high_hz / fs);
  const double w0 = std::sqrt(wl * wh);
  const double bw = wh - wl;

  // Butterworth low-pass prototype poles on the unit circle, left half-plane
  std::vector<cd> proto;
  for (int k = 0; k < order; ++k) {
    const double theta = pi / 2.0 + pi * (2.0 * k + 1.0) / (2.0 * order);
    proto.emplace_back(std::cos(theta), std::sin(theta));
  }

  // low-pass -> band-pass: each pole splits in two; order zeros sit at s = 0
  std::vector<cd> s_poles;
  s_poles.reserve(2 * static_cast<size_t>(order));
  for (const cd& p : proto) {
    const cd half = p * (bw / 2.0);
    const cd root = std::sqrt(half * half - cd(w0 * w0, 0.0));
    s_poles.push_back(half + root);
    s_poles.push_back(half - root);
  }

  // bilinear transform; the band-pass zeros land at z = +1 and z = -1
  std::vector<cd> z_poles, z_zeros;
  for (const cd& s : s_poles) z_poles.push_back((cd(fs2, 0.0) + s) / (cd(fs2, 0.0) - s));
  for (int k = 0; k < order; ++k) {
    z_zeros.emplace_back(1.0, 0.0);
    z_zeros.emplace_back(-1.0, 0.0);
  }

  FilterCoeffs f;
  f.b = poly_from_roots(z_zeros);
  f.a = poly_from_roots(z_poles);
  const double a0 = f.a[0];
  for (double& v : f.a) v /= a0;
  for (double& v : f.b) v /= a0;

  // normalize gain to exactly 1 at the warped center frequency
  const double wc = 2.0 * std::atan(w0 / fs2);
  const cd zinv = std::exp(cd(0.0, -wc));
  cd num(0.0, 0.0), den(0.0, 0.0);
  for (size_t i = f.b.size(); i-- > 0;) num = num * zinv + f.b[i];
  for (size_t i = f.a.size(); i-- > 0;) den = den * zinv + f.a[i];
  const double gain = std::abs(num / den);
  if (!(gain > 0.0)) raise(errc::numerical_failure, "butter_bandpass: degenerate design");
  for (double& v : f.b) v /= gain;
  return f;
}

Vector lfilter_zi(const FilterCoeffs& f) {
  const Index n = static_cast<Index>(f.a.size()) - 1;
  // Solve (I - A) zi = B where A is the transposed companion matrix of a and
  // B[k] = b[k+1] - a[k+1] * b[0]; this is the steady state of the direct-form
  // II transposed delay line for a unit step input.
  Matrix m = Matrix::Identity(n, n);
  for (Index i = 0; i < n; ++i) m(i, 0) += f.a[static_cast<size_t>(i) + 1];
  for (Index i = 0; i + 1 < n; ++i) m(i, i + 1) -= 1.0;
  Vector rhs(n);
  for (Index i = 0; i < n; ++i) {
    rhs(i) = f.b[static_cast<size_t>(i) + 1] - f.a[static_cast<size_t>(i) + 1] * f.b[0];
  }
  return m.partialPivLu().solve(rhs);
}

Vector lfilter(const FilterCoeffs& f, const Vector& x, const Vector& zi) {
  const size_t nb = f.b.size();
  std::vector<double> z(nb - 1, 0.0);
  if (zi.size() > 0) {
    if (zi.size() != static_cast<Index>(nb - 1)) {
      raise(errc::dimension_mismatch, "lfilter: zi has wrong length");
    }
    for (size_t i = 0; i + 1 < nb; ++i) z[i] = zi(static_cast<Index>(i));
  }
  Vector y(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    const double yi = f.b[0] * xi + z[0];
    for (size_t k = 0; k + 1 < z.size(); ++k) {
      z[k] = f.b[k + 1] * xi + z[k + 1] - f.a[k + 1] * yi;
    }
    z.back() = f.b[nb - 1] * xi - f.a[nb - 1] * yi;
    y(i) = yi;
  }
  return y;
}

Vector filtfilt(const FilterCoeffs& f, const Vector& x) {
  const Index order = static_cast<Index>(f.a.size()) - 1;
  const Index edge = 3 * order;
  if (x.size() <= edge) {
    raise(errc::signal_too_short, "filtfilt: signal must be longer than 3x the filter order (" +
                                      std::to_string(edge) + " samples)");
  }
  const Index n = x.size();
  Vector ext(n + 2 * edge);
  for (Index i = 0; i < edge; ++i) ext(i) = 2.0 * x(0) - x(edge - i);
  ext.segment(edge, n) = x;
  for (Index i = 0; i < edge; ++i) ext(n + edge + i) = 2.0 * x(n - 1) - x(n - 2 - i);

  const Vector zi = lfilter_zi(f);
  Vector y = lfilter(f, ext, zi * ext(0));
  y.reverseInPlace();
  y = lfilter(f, y, zi * y(0));
  y.reverseInPlace();
  return y.segment(edge, n);
}

EmgRecording bandpass_filter(const EmgRecording& rec, const BandpassConfig& cfg) {
  const FilterCoeffs f = butter_bandpass(cfg.order, cfg.low_hz, cfg.high_hz, rec.sample_rate_hz);
  EmgRecording out = rec;
  for (Index c = 0; c < rec.samples.rows(); ++c) {
    out.samples.row(c) = filtfilt(f, rec.samples.row(c).transpose()).transpose();
  }
  return out;
}

Vector analytic_magnitude(const Vector& x) {
  const Index n = x.size();
  if (n < 2) raise(errc::signal_too_short, "analytic_magnitude: need at least 2 samples");
  Eigen::FFT<double> fft;
  std::vector<double> in(x.data(), x.data() + n);
  std::vector<cd> spec;
  fft.fwd(spec, in);
  // keep DC (and Nyquist for even n), double positive frequencies, zero the rest
  const Index half = n / 2;
  if (n % 2 == 0) {
    for (Index k = 1; k < half; ++k) spec[static_cast<size_t>(k)] *= 2.0;
    for (Index k = half + 1; k < n; ++k) spec[static_cast<size_t>(k)] = cd(0.0, 0.0);
  } else {
    for (Index k = 1; k <= half; ++k) spec[static_cast<size_t>(k)] *= 2.0;
    for (Index k = half + 1; k < n; ++k) spec[static_cast<size_t>(k)] = cd(0.0, 0.0);
  }
  std::vector<cd> analytic;
  fft.inv(analytic, spec);
  Vector mag(n);
  for (Index i = 0; i < n; ++i) mag(i) = std::abs(analytic[static_cast<size_t>(i)]);
  return mag;
}

Vector moving_mean(const Vector& x, int window) {
  if (window < 1) raise(errc::invalid_argument, "moving_mean: window must be >= 1");
  const Index n = x.size();
  std::vector<double> prefix(static_cast<size_t>(n) + 1, 0.0);
  for (Index i = 0; i < n; ++i) prefix[static_cast<size_t>(i) + 1] = prefix[static_cast<size_t>(i)] + x(i);
  const Index half = (window - 1) / 2;
  const Index half_hi = window / 2;
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const Index lo = std::max<Index>(0, i - half);
    const Index hi = std::min<Index>(n - 1, i + half_hi);
    out(i) = (prefix[static_cast<size_t>(hi) + 1] - prefix[static_cast<size_t>(lo)]) /
             static_cast<double>(hi - lo + 1);
  }
  return out;
}

EnvelopeMatrix extract_envelope(const EmgRecording& filtered, const EnvelopeConfig& cfg) {
  if (cfg.smooth_samples < 1) {
    raise(errc::invalid_argument, "extract_envelope: smooth_samples must be >= 1");
  }
  EnvelopeMatrix env;
  env.sample_rate_hz = filtered.sample_rate_hz;
  env.channels = filtered.channels;
  env.values.resize(filtered.samples.rows(), filtered.samples.cols());
  for (Index c = 0; c < filtered.samples.rows(); ++c) {
    env.values.row(c) =
        moving_mean(analytic_magnitude(filtered.samples.row(c).transpose()), cfg.smooth_samples)
            .transpose();
  }
  return env;
}

double rms_amplitude(const Vector& x) {
  if (x.size() == 0) raise(errc::signal_too_short, "rms_amplitude: empty signal");
  return std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

Vector rms_per_channel(const Matrix& channels) {
  Vector out(channels.rows());
  for (Index c = 0; c < channels.rows(); ++c) {
    out(c) = rms_amplitude(Vector(channels.row(c).transpose()));
  }
  return out;
}

Psd welch_psd(const Vector& x, double fs, const PsdConfig& cfg) {
  const Index seg = cfg.segment_len;
  if (seg < 8) raise(errc::invalid_argument, "welch_psd: segment_len must be >= 8");
  if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0)) {
    raise(errc::invalid_argument, "welch_psd: overlap must be in [0, 1)");
  }
  if (x.size() < 2 * seg) {
    raise(errc::signal_too_short, "welch_psd: signal shorter than 2x segment_len");
  }
  const Index step = std::max<Index>(1, static_cast<Index>(std::lround((1.0 - cfg.overlap) *
                                                                       static_cast<double>(seg))));
  Vector window(seg);
  double win_power = 0.0;
  for (Index i = 0; i < seg; ++i) {
    window(i) = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(seg - 1));
    win_power += window(i) * window(i);
  }

  const Index nbins = seg / 2 + 1;
  Vector acc = Vector::Zero(nbins);
  Eigen::FFT<double> fft;
  Index nseg = 0;
  std::vector<double> buf(static_cast<size_t>(seg));
  std::vector<cd> spec;
  for (Index start = 0; start + seg <= x.size(); start += step) {
    for (Index i = 0; i < seg; ++i) buf[static_cast<size_t>(i)] = x(start + i) * window(i);
    fft.fwd(spec, buf);
    for (Index k = 0; k < nbins; ++k) acc(k) += std::norm(spec[static_cast<size_t>(k)]);
    ++nseg;
  }
  Psd psd;
  psd.freq_hz.resize(nbins);
  psd.power.resize(nbins);
  const double scale = 1.0 / (fs * win_power * static_cast<double>(nseg));
  for (Index k = 0; k < nbins; ++k) {
    psd.freq_hz(k) = static_cast<double>(k) * fs / static_cast<double>(seg);
    const double one_sided = (k == 0 || (seg % 2 == 0 && k == nbins - 1)) ? 1.0 : 2.0;
    psd.power(k) = acc(k) * scale * one_sided;
  }
  return psd;
}

namespace {

// Frequency at which the running bin-power sum first reaches half the total,
// scanning in the given direction, interpolated linearly across the crossing
// bin. dir is +1 (from DC up) or -1 (from Nyquist down).
double half_power_crossing(const Psd& psd, double df, int dir) {
  const double target = psd.power.sum() / 2.0;
  const Index n = psd.power.size();
  double cum = 0.0;
  for (Index step = 0; step < n; ++step) {
    const Index k = dir > 0 ? step : n - 1 - step;
    const double next = cum + psd.power(k);
    if (next >= target) {
      const double frac = psd.power(k) > 0.0 ? (target - cum) / psd.power(k) : 0.0;
      return psd.freq_hz(k) + dir * (frac - 0.5) * df;
    }
    cum = next;
  }
  return dir > 0 ? psd.freq_hz(n - 1) : psd.freq_hz(0);
}

}  // namespace

double median_frequency(const Vector& x, double fs, const PsdConfig& cfg) {
  const Psd psd = welch_psd(x, fs, cfg);
  if (!(psd.power.sum() > 0.0)) raise(errc::zero_variance, "median_frequency: zero total power");
  // Midpoint of the lowest and highest half-power crossings. For a unimodal
  // spectrum both crossings land in the same bin; for a balanced bimodal
  // spectrum this returns the midpoint between the modes instead of an
  // arbitrary side of the tie.
  const double df = fs / static_cast<double>(cfg.segment_len);
  return 0.5 * (half_power_crossing(psd, df, +1) + half_power_crossing(psd, df, -1));
}

Vector median_frequency_per_channel(const Matrix& channels, double fs, const PsdConfig& cfg) {
  Vector out(channels.rows());
  for (Index c = 0; c < channels.rows(); ++c) {
    out(c) = median_frequency(Vector(channels.row(c).transpose()), fs, cfg);
  }
  return out;
}

FatigueMetrics compute_fatigue_metrics(const EmgRecording& rec, const PsdConfig& cfg) {
  FatigueMetrics m;
  m.channels = rec.channels;
  m.rms = rms_per_channel(rec.samples);
  m.median_freq_hz = median_frequency_per_channel(rec.samples, rec.sample_rate_hz, cfg);
  return m;
}

FatigueChange fatigue_comparison(const FatigueMetrics& reference, const FatigueMetrics& test) {
  if (reference.channels != test.channels) {
    raise(errc::dimension_mismatch, "fatigue_comparison: channel lists differ");
  }
  FatigueChange out;
  out.channels = reference.channels;
  out.rms_change_pct.resize(reference.rms.size());
  out.medfreq_change_pct.resize(reference.median_freq_hz.size());
  for (Index i = 0; i < reference.rms.size(); ++i) {
    if (reference.rms(i) == 0.0 || reference.median_freq_hz(i) == 0.0) {
      raise(errc::zero_variance, "fatigue_comparison: zero reference metric for channel " +
                                     reference.channels[static_cast<size_t>(i)]);
    }
    out.rms_change_pct(i) = 100.0 * (test.rms(i) - reference.rms(i)) / reference.rms(i);
    out.medfreq_change_pct(i) =
        100.0 * (test.median_freq_hz(i) - reference.median_freq_hz(i)) / reference.median_freq_hz(i);
  }
  return out;
}

EmgRecording ingest_emg_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& expected_labels) {
  TimedMatrix tm = read_timed_csv(path, expected_labels);
  EmgRecording rec;
  rec.samples = std::move(tm.values);
  rec.sample_rate_hz = tm.sample_rate_hz;
  rec.channels = std::move(tm.channels);
  return rec;
}

}  // namespace synkin
