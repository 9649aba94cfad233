#pragma once

#include "isd/core.hpp"
#include "isd/rng.hpp"

#include <cmath>
#include <utility>

namespace isd {

// Synthetic trial generator: per class c, trials are mixing_c * S + noise,
// where S holds band-limited sinusoid sources. Class-specific mixing keeps
// spatial covariances apart (tangent/CSP features separable) and
// class-specific bands keep spectra apart (DFT features separable).
struct SynthSpec {
  int n_classes{2};
  int trials_per_class{100};
  int n_channels{8};
  int n_samples{256};
  double fs{256.0};
  std::vector<Matrix> mixing;                   // per class, c×c; empty = derive from seed
  std::vector<std::pair<double, double>> bands; // per class, Hz; empty = spread automatically
  int oscillators{3};                           // per source channel
  double noise_amp{0.5};
  std::uint64_t seed{0};
};

namespace detail {

inline std::vector<std::pair<double, double>> auto_bands(const SynthSpec& spec) {
  std::vector<std::pair<double, double>> bands(spec.n_classes);
  const double nyq = spec.fs / 2.0;
  const double width = std::min(4.0, nyq / (2.0 * spec.n_classes));
  for (int c = 0; c < spec.n_classes; ++c) {
    double lo = 6.0 + 8.0 * c;
    if (lo + width >= nyq) lo = nyq * (0.2 + 0.6 * c / std::max(1, spec.n_classes));
    bands[c] = {lo, lo + width};
  }
  return bands;
}

inline std::vector<Matrix> auto_mixing(const SynthSpec& spec) {
  std::vector<Matrix> mixing(spec.n_classes);
  const int c = spec.n_channels;
  for (int cls = 0; cls < spec.n_classes; ++cls) {
    auto rng = make_rng(spec.seed, "mixing", static_cast<std::uint64_t>(cls));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(c, c);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < c; ++j) g(i, j) = gauss(rng);
    mixing[cls] = Matrix::Identity(c, c) + 0.8 / std::sqrt(static_cast<double>(c)) * g;
  }
  return mixing;
}

} // namespace detail

inline void validate(const SynthSpec& spec) {
  if (spec.n_classes < 1 || spec.trials_per_class < 1 || spec.n_channels < 1 ||
      spec.n_samples < 1 || spec.oscillators < 1)
    throw std::invalid_argument("SynthSpec: all counts must be >= 1");
  if (spec.fs <= 0.0) throw std::invalid_argument("SynthSpec: fs must be > 0");
  if (spec.noise_amp < 0.0) throw std::invalid_argument("SynthSpec: noise_amp must be >= 0");
  if (!spec.bands.empty()) {
    if (static_cast<int>(spec.bands.size()) != spec.n_classes)
      throw std::invalid_argument("SynthSpec: need one band per class");
    for (auto [lo, hi] : spec.bands)
      if (!(lo > 0.0 && hi < spec.fs / 2.0 && lo <= hi))
        throw std::invalid_argument("SynthSpec: bands must lie inside (0, fs/2)");
  }
  if (!spec.mixing.empty()) {
    if (static_cast<int>(spec.mixing.size()) != spec.n_classes)
      throw std::invalid_argument("SynthSpec: need one mixing matrix per class");
    for (const Matrix& m : spec.mixing)
      if (m.rows() != spec.n_channels || m.cols() != spec.n_channels)
        throw std::invalid_argument("SynthSpec: mixing matrix must be n_channels x n_channels");
  }
}

inline TrialSet synth_trialset(const SynthSpec& spec) {
  validate(spec);
  const auto bands = spec.bands.empty() ? detail::auto_bands(spec) : spec.bands;
  const auto mixing = spec.mixing.empty() ? detail::auto_mixing(spec) : spec.mixing;

  TrialSet ts;
  ts.fs = spec.fs;
  for (int c = 0; c < spec.n_classes; ++c) ts.class_names.push_back("class" + std::to_string(c));

  const int c = spec.n_channels;
  const int t = spec.n_samples;
  int trial_index = 0;
  for (int cls = 0; cls < spec.n_classes; ++cls) {
    const auto [lo, hi] = bands[cls];
    for (int k = 0; k < spec.trials_per_class; ++k, ++trial_index) {
      auto rng = make_rng(spec.seed, "trial", static_cast<std::uint64_t>(trial_index));
      std::uniform_real_distribution<double> freq(lo, hi);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
      std::normal_distribution<double> gauss(0.0, 1.0);

      Matrix sources = Matrix::Zero(c, t);
      for (int ch = 0; ch < c; ++ch)
        for (int o = 0; o < spec.oscillators; ++o) {
          const double f = hi > lo ? freq(rng) : lo;
          const double p = phase(rng);
          for (int s = 0; s < t; ++s)
            sources(ch, s) += std::sin(2.0 * M_PI * f * s / spec.fs + p);
        }

      Matrix x = mixing[cls] * sources;
      if (spec.noise_amp > 0.0)
        for (int ch = 0; ch < c; ++ch)
          for (int s = 0; s < t; ++s) x(ch, s) += spec.noise_amp * gauss(rng);

      ts.trials.push_back(std::move(x));
      ts.labels.push_back(cls);
    }
  }
  return ts;
}

} // namespace isd
