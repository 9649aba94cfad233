#pragma once

#include "isd/core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace isd {

// ---------------------------------------------------------------------------
// IIR filtering: Butterworth designs realized as cascaded second-order
// sections (analog prototype -> bilinear transform), applied either causally
// or forward-backward for zero phase.
// ---------------------------------------------------------------------------

struct FilterSpec {
  enum class Kind { Lowpass, Bandpass };
  Kind kind{Kind::Lowpass};
  double low_hz{0.0};  // bandpass lower edge; unused for lowpass
  double high_hz{0.0}; // upper cutoff
  int order{4};        // analog prototype order (bandpass doubles it)
  bool zero_phase{true};

  static FilterSpec lowpass(double cutoff_hz, int order = 4, bool zero_phase = true) {
    return {Kind::Lowpass, 0.0, cutoff_hz, order, zero_phase};
  }
  static FilterSpec bandpass(double low_hz, double high_hz, int order = 4, bool zero_phase = true) {
    return {Kind::Bandpass, low_hz, high_hz, order, zero_phase};
  }
};

struct Biquad {
  double b0{1.0}, b1{0.0}, b2{0.0}; // numerator
  double a1{0.0}, a2{0.0};          // denominator (a0 = 1)
};

namespace detail {

using cd = std::complex<double>;

// Unit-circle poles of the analog Butterworth prototype, left half-plane.
inline std::vector<cd> butter_prototype(int order) {
  std::vector<cd> poles(order);
  for (int k = 0; k < order; ++k) {
    const double theta = M_PI * (2.0 * k + order + 1.0) / (2.0 * order);
    poles[k] = cd(std::cos(theta), std::sin(theta));
  }
  return poles;
}

inline cd bilinear(cd s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Pair complex-conjugate digital poles into adjacent slots.
inline void sort_conjugate_pairs(std::vector<cd>& poles) {
  std::sort(poles.begin(), poles.end(), [](cd a, cd b) {
    if (std::abs(a.imag()) != std::abs(b.imag())) return std::abs(a.imag()) > std::abs(b.imag());
    if (a.imag() != b.imag()) return a.imag() > b.imag();
    return a.real() < b.real();
  });
}

inline cd cascade_response(const std::vector<Biquad>& sos, double freq_hz, double fs) {
  const cd z = std::polar(1.0, 2.0 * M_PI * freq_hz / fs);
  const cd zi = 1.0 / z;
  cd h = 1.0;
  for (const Biquad& s : sos)
    h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
  return h;
}

} // namespace detail

inline std::vector<Biquad> butter_lowpass_sos(int order, double cutoff_hz, double fs) {
  if (order < 1) throw std::invalid_argument("butterworth: order must be >= 1");
  if (!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0))
    throw std::invalid_argument("butterworth: cutoff must lie inside (0, fs/2)");

  const double wc = 2.0 * fs * std::tan(M_PI * cutoff_hz / fs);
  std::vector<detail::cd> poles;
  for (detail::cd p : detail::butter_prototype(order)) poles.push_back(detail::bilinear(wc * p, fs));
  detail::sort_conjugate_pairs(poles);

  std::vector<Biquad> sos;
  for (std::size_t i = 0; i + 1 < poles.size(); i += 2) {
    Biquad s;
    s.b0 = 1.0; s.b1 = 2.0; s.b2 = 1.0; // two zeros at z = -1
    s.a1 = -(poles[i] + poles[i + 1]).real();
    s.a2 = (poles[i] * poles[i + 1]).real();
    sos.push_back(s);
  }
  if (order % 2 != 0) {
    Biquad s;
    s.b0 = 1.0; s.b1 = 1.0; s.b2 = 0.0; // single zero at z = -1
    s.a1 = -poles.back().real();
    s.a2 = 0.0;
    sos.push_back(s);
  }

  const double gain = std::abs(detail::cascade_response(sos, 0.0, fs));
  sos[0].b0 /= gain; sos[0].b1 /= gain; sos[0].b2 /= gain;
  return sos;
}

inline std::vector<Biquad> butter_bandpass_sos(int order, double low_hz, double high_hz, double fs) {
  if (order < 1) throw std::invalid_argument("butterworth: order must be >= 1");
  if (!(low_hz > 0.0 && high_hz < fs / 2.0 && low_hz < high_hz))
    throw std::invalid_argument("butterworth: band edges must satisfy 0 < low < high < fs/2");

  const double w1 = 2.0 * fs * std::tan(M_PI * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(M_PI * high_hz / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<detail::cd> poles;
  for (detail::cd q : detail::butter_prototype(order)) {
    const detail::cd qb = q * bw;
    const detail::cd disc = std::sqrt(qb * qb - 4.0 * w0sq);
    poles.push_back(detail::bilinear(0.5 * (qb + disc), fs));
    poles.push_back(detail::bilinear(0.5 * (qb - disc), fs));
  }
  detail::sort_conjugate_pairs(poles);

  // order zeros at z = +1 and order at z = -1: one of each per section.
  std::vector<Biquad> sos;
  for (std::size_t i = 0; i + 1 < poles.size(); i += 2) {
    Biquad s;
    s.b0 = 1.0; s.b1 = 0.0; s.b2 = -1.0;
    s.a1 = -(poles[i] + poles[i + 1]).real();
    s.a2 = (poles[i] * poles[i + 1]).real();
    sos.push_back(s);
  }

  const double f_center = std::sqrt(low_hz * high_hz);
  const double gain = std::abs(detail::cascade_response(sos, f_center, fs));
  sos[0].b0 /= gain; sos[0].b1 /= gain; sos[0].b2 /= gain;
  return sos;
}

inline std::vector<Biquad> design_sos(const FilterSpec& spec, double fs) {
  if (spec.kind == FilterSpec::Kind::Lowpass) return butter_lowpass_sos(spec.order, spec.high_hz, fs);
  return butter_bandpass_sos(spec.order, spec.low_hz, spec.high_hz, fs);
}

namespace detail {

// Direct-form-II-transposed single pass. State starts at the step-response
// steady state scaled by the first input sample, so constant signals pass
// through without a startup transient.
inline Vector sosfilt(const std::vector<Biquad>& sos, const Vector& x) {
  Vector y = x;
  double level = x.size() > 0 ? x[0] : 0.0;
  for (const Biquad& s : sos) {
    const double denom = 1.0 + s.a1 + s.a2;
    const double h = denom != 0.0 ? (s.b0 + s.b1 + s.b2) / denom : 0.0;
    double s1 = (h - s.b0) * level;
    double s2 = (h - s.b0 - s.b1 + s.a1 * h) * level;
    for (Eigen::Index n = 0; n < y.size(); ++n) {
      const double in = y[n];
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      y[n] = out;
    }
    level *= h;
  }
  return y;
}

} // namespace detail

// Forward-backward filtering with odd-reflection padding: zero phase, squared
// magnitude response.
inline Vector filtfilt(const std::vector<Biquad>& sos, const Vector& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return x;
  const Eigen::Index pad = std::min<Eigen::Index>(3 * (2 * static_cast<Eigen::Index>(sos.size()) + 1), n - 1);

  Vector ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  ext.segment(pad, n) = x;
  for (Eigen::Index i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  Vector y = detail::sosfilt(sos, ext);
  y.reverseInPlace();
  y = detail::sosfilt(sos, y);
  y.reverseInPlace();
  return y.segment(pad, n);
}

inline Vector sosfilt_causal(const std::vector<Biquad>& sos, const Vector& x) {
  return detail::sosfilt(sos, x);
}

inline TrialSet filter_trials(const TrialSet& ts, const FilterSpec& spec) {
  const std::vector<Biquad> sos = design_sos(spec, ts.fs);
  TrialSet out;
  out.fs = ts.fs;
  out.labels = ts.labels;
  out.class_names = ts.class_names;
  out.trials.reserve(ts.trials.size());
  for (const Matrix& trial : ts.trials) {
    Matrix y(trial.rows(), trial.cols());
    for (int ch = 0; ch < trial.rows(); ++ch) {
      const Vector row = trial.row(ch).transpose();
      y.row(ch) = (spec.zero_phase ? filtfilt(sos, row) : sosfilt_causal(sos, row)).transpose();
    }
    out.trials.push_back(std::move(y));
  }
  return out;
}

// Downsample after an anti-alias lowpass at 0.45*new_fs. Integer ratios
// decimate directly; otherwise samples are linearly interpolated.
inline TrialSet resample_trials(const TrialSet& ts, double new_fs) {
  if (!(new_fs > 0.0) || new_fs >= ts.fs)
    throw std::invalid_argument("resample_trials: new_fs must lie in (0, fs)");

  const TrialSet filtered = filter_trials(ts, FilterSpec::lowpass(0.45 * new_fs, 8, true));
  const int n = ts.n_samples();
  const int m = static_cast<int>(std::floor(n * new_fs / ts.fs));
  if (m < 1) throw std::invalid_argument("resample_trials: output would be empty");
  const double ratio = ts.fs / new_fs;
  const bool integer_ratio = std::abs(ratio - std::round(ratio)) < 1e-12;

  TrialSet out;
  out.fs = new_fs;
  out.labels = ts.labels;
  out.class_names = ts.class_names;
  out.trials.reserve(filtered.trials.size());
  for (const Matrix& trial : filtered.trials) {
    Matrix y(trial.rows(), m);
    for (int ch = 0; ch < trial.rows(); ++ch)
      for (int k = 0; k < m; ++k) {
        const double pos = k * ratio;
        if (integer_ratio) {
          y(ch, k) = trial(ch, static_cast<int>(std::llround(pos)));
        } else {
          const int i0 = static_cast<int>(std::floor(pos));
          const int i1 = std::min(i0 + 1, n - 1);
          const double frac = pos - i0;
          y(ch, k) = (1.0 - frac) * trial(ch, i0) + frac * trial(ch, i1);
        }
      }
    out.trials.push_back(std::move(y));
  }
  return out;
}

inline TrialSet trim_trials(const TrialSet& ts, int n) {
  if (n < 1 || n > ts.n_samples())
    throw std::invalid_argument("trim_trials: n must lie in [1, n_samples]");
  TrialSet out;
  out.fs = ts.fs;
  out.labels = ts.labels;
  out.class_names = ts.class_names;
  out.trials.reserve(ts.trials.size());
  for (const Matrix& trial : ts.trials) out.trials.push_back(trial.leftCols(n));
  return out;
}

// ---------------------------------------------------------------------------
// Per-trial spectral and statistical features
// ---------------------------------------------------------------------------

// |Y[w]| for w = 0..n_bins-1 by direct summation of the DFT.
inline Vector dft_magnitudes(const Vector& x, int n_bins) {
  const Eigen::Index n = x.size();
  Vector mags(n_bins);
  for (int w = 0; w < n_bins; ++w) {
    double re = 0.0, im = 0.0;
    const double step = -2.0 * M_PI * w / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      re += x[i] * std::cos(step * i);
      im += x[i] * std::sin(step * i);
    }
    mags[w] = std::hypot(re, im);
  }
  return mags;
}

// DFT bins from 0 Hz through max_hz per channel, concatenated channel-major.
// complex_pairs swaps magnitudes for interleaved (re, im) values.
inline FeatureMatrix dft_features(const TrialSet& ts, double max_hz, bool complex_pairs = false) {
  if (!(max_hz > 0.0) || max_hz > ts.fs / 2.0)
    throw std::invalid_argument("dft_features: max_hz must lie in (0, fs/2]");
  const int n = ts.n_samples();
  const int c = ts.n_channels();
  const int bins = static_cast<int>(std::floor(max_hz * n / ts.fs)) + 1;
  const int width = complex_pairs ? 2 * bins : bins;

  FeatureMatrix feats(ts.n_trials(), c * width);
  for (int i = 0; i < ts.n_trials(); ++i) {
    const Matrix& trial = ts.trials[i];
    for (int ch = 0; ch < c; ++ch) {
      const Vector x = trial.row(ch).transpose();
      if (!complex_pairs) {
        feats.block(i, ch * width, 1, bins) = dft_magnitudes(x, bins).transpose();
      } else {
        for (int w = 0; w < bins; ++w) {
          double re = 0.0, im = 0.0;
          const double step = -2.0 * M_PI * w / static_cast<double>(n);
          for (int s = 0; s < n; ++s) {
            re += x[s] * std::cos(step * s);
            im += x[s] * std::sin(step * s);
          }
          feats(i, ch * width + 2 * w) = re;
          feats(i, ch * width + 2 * w + 1) = im;
        }
      }
    }
  }
  return feats;
}

struct SpectrogramSpec {
  int window{64};
  int overlap{32};
};

inline int spectrogram_time_bins(const SpectrogramSpec& spec, int n_samples) {
  const int hop = spec.window - spec.overlap;
  return 1 + (n_samples - spec.window) / hop;
}

// Hann-windowed STFT magnitudes, flattened [frequency][time][channel]
// row-major into one feature row per trial.
inline FeatureMatrix spectrogram_features(const TrialSet& ts, const SpectrogramSpec& spec) {
  const int n = ts.n_samples();
  if (spec.window < 1 || spec.window > n)
    throw std::invalid_argument("spectrogram_features: window must lie in [1, n_samples]");
  if (spec.overlap < 0 || spec.overlap >= spec.window)
    throw std::invalid_argument("spectrogram_features: overlap must lie in [0, window)");

  const int w = spec.window;
  const int hop = w - spec.overlap;
  const int t_bins = spectrogram_time_bins(spec, n);
  const int f_bins = w / 2 + 1;
  const int c = ts.n_channels();

  Vector hann(w);
  for (int i = 0; i < w; ++i)
    hann[i] = w > 1 ? 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (w - 1))) : 1.0;

  FeatureMatrix feats(ts.n_trials(), f_bins * t_bins * c);
  for (int i = 0; i < ts.n_trials(); ++i) {
    const Matrix& trial = ts.trials[i];
    for (int ch = 0; ch < c; ++ch)
      for (int tb = 0; tb < t_bins; ++tb) {
        const Vector frame = trial.row(ch).segment(tb * hop, w).transpose().cwiseProduct(hann);
        const Vector mags = dft_magnitudes(frame, f_bins);
        for (int fb = 0; fb < f_bins; ++fb)
          feats(i, (fb * t_bins + tb) * c + ch) = mags[fb];
      }
  }
  return feats;
}

// Per channel: mean, unbiased variance, standard deviation, skewness
// (population moments, m3 / m2^{3/2}); 4*c features channel-major.
inline FeatureMatrix statistical_features(const TrialSet& ts) {
  const int n = ts.n_samples();
  if (n < 2) throw std::invalid_argument("statistical_features: need at least 2 samples");
  const int c = ts.n_channels();

  FeatureMatrix feats(ts.n_trials(), 4 * c);
  for (int i = 0; i < ts.n_trials(); ++i)
    for (int ch = 0; ch < c; ++ch) {
      const auto row = ts.trials[i].row(ch);
      const double mean = row.mean();
      double m2 = 0.0, m3 = 0.0;
      for (int s = 0; s < n; ++s) {
        const double d = row[s] - mean;
        m2 += d * d;
        m3 += d * d * d;
      }
      m2 /= n;
      m3 /= n;
      const double var_unbiased = m2 * n / (n - 1.0);
      const double skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
      feats(i, 4 * ch + 0) = mean;
      feats(i, 4 * ch + 1) = var_unbiased;
      feats(i, 4 * ch + 2) = std::sqrt(var_unbiased);
      feats(i, 4 * ch + 3) = skew;
    }
  return feats;
}

} // namespace isd
