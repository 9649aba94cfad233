#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace isd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Trials × features, one row per trial.
using FeatureMatrix = Eigen::MatrixXd;

// A set of equally shaped multichannel trials with one class label each.
// Each trial is a channels × samples matrix in 64-bit floats; storage on
// disk is 32-bit (see io.hpp).
struct TrialSet {
  std::vector<Matrix> trials;           // each n_channels × n_samples
  std::vector<int> labels;              // 0-based class id per trial
  double fs{0.0};                       // sampling rate in Hz
  std::vector<std::string> class_names; // ordered, size = number of classes

  int n_trials() const { return static_cast<int>(trials.size()); }
  int n_channels() const { return trials.empty() ? 0 : static_cast<int>(trials[0].rows()); }
  int n_samples() const { return trials.empty() ? 0 : static_cast<int>(trials[0].cols()); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
};

inline void validate(const TrialSet& ts) {
  if (ts.trials.size() != ts.labels.size())
    throw std::invalid_argument("TrialSet: labels length != n_trials");
  if (ts.fs <= 0.0) throw std::invalid_argument("TrialSet: fs must be > 0");
  const int c = ts.n_channels();
  const int t = ts.n_samples();
  for (std::size_t i = 0; i < ts.trials.size(); ++i) {
    const Matrix& x = ts.trials[i];
    if (x.rows() != c || x.cols() != t)
      throw std::invalid_argument("TrialSet: trial " + std::to_string(i) + " has inconsistent shape");
    if (!x.allFinite())
      throw std::runtime_error("TrialSet: trial " + std::to_string(i) + " contains non-finite samples");
  }
  for (std::size_t i = 0; i < ts.labels.size(); ++i) {
    if (ts.labels[i] < 0 || ts.labels[i] >= ts.n_classes())
      throw std::invalid_argument("TrialSet: label " + std::to_string(ts.labels[i]) +
                                  " out of range at trial " + std::to_string(i));
  }
}

// Trial counts per class, indexed by class id.
inline std::vector<int> class_counts(const std::vector<int>& labels, int n_classes) {
  std::vector<int> counts(n_classes, 0);
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw std::invalid_argument("class_counts: label out of range");
    ++counts[y];
  }
  return counts;
}

} // namespace isd
