#pragma once

#include "isd/core.hpp"
#include "isd/rng.hpp"

#include <algorithm>
#include <numeric>

namespace isd {

// Drops every trial containing at least one sample outside [low, high].
// Bounds are user-supplied; there are no defaults.
inline TrialSet reject_amplitude(const TrialSet& ts, double low, double high) {
  if (!(low < high)) throw std::invalid_argument("reject_amplitude: low must be < high");
  TrialSet out;
  out.fs = ts.fs;
  out.class_names = ts.class_names;
  for (int i = 0; i < ts.n_trials(); ++i) {
    const Matrix& x = ts.trials[i];
    if (x.minCoeff() >= low && x.maxCoeff() <= high) {
      out.trials.push_back(x);
      out.labels.push_back(ts.labels[i]);
    }
  }
  if (out.trials.empty()) throw std::runtime_error("reject_amplitude: all trials rejected");
  return out;
}

struct FoldPlan {
  int k{0};
  std::vector<int> assignments; // fold index per trial
  std::uint64_t seed{0};
};

// Stratified k-fold assignment: per class, shuffled indices are dealt
// round-robin, so per-fold class counts stay within 1 of proportionality.
inline FoldPlan stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  if (labels.empty()) throw std::invalid_argument("stratified_kfold: no labels");

  int n_classes = 0;
  for (int y : labels) {
    if (y < 0) throw std::invalid_argument("stratified_kfold: negative label");
    n_classes = std::max(n_classes, y + 1);
  }
  std::vector<std::vector<int>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
  for (int c = 0; c < n_classes; ++c)
    if (static_cast<int>(by_class[c].size()) < k)
      throw std::runtime_error("stratified_kfold: class " + std::to_string(c) + " has fewer than k members");

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), -1);

  auto rng = make_rng(seed, "folds");
  int offset = 0; // rotates which fold receives each class's remainder trials
  for (int c = 0; c < n_classes; ++c) {
    std::vector<int>& idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < idx.size(); ++j)
      plan.assignments[idx[j]] = static_cast<int>((j + offset) % k);
    offset = static_cast<int>((offset + idx.size()) % k);
  }
  return plan;
}

inline std::vector<int> fold_indices(const FoldPlan& plan, int fold, bool train) {
  std::vector<int> out;
  for (std::size_t i = 0; i < plan.assignments.size(); ++i)
    if ((plan.assignments[i] == fold) != train) out.push_back(static_cast<int>(i));
  return out;
}

} // namespace isd
