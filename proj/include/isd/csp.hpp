#pragma once

#include "isd/core.hpp"
#include "isd/spd.hpp"

namespace isd {

// Spatial covariance of one trial: channel means removed, C = X X^T/(t-1),
// then shrunk toward the scaled identity: C <- (1-l)C + l (tr C / c) I.
inline SpdMatrix trial_covariance(const Matrix& trial, double shrinkage = 0.05) {
  if (trial.cols() < 2) throw std::invalid_argument("trial_covariance: need at least 2 samples");
  if (shrinkage < 0.0 || shrinkage > 1.0)
    throw std::invalid_argument("trial_covariance: shrinkage must lie in [0, 1]");

  const int c = static_cast<int>(trial.rows());
  Matrix centered = trial;
  for (int ch = 0; ch < c; ++ch) centered.row(ch).array() -= trial.row(ch).mean();

  Matrix cov = centered * centered.transpose() / (trial.cols() - 1.0);
  cov = (1.0 - shrinkage) * cov + shrinkage * (cov.trace() / c) * Matrix::Identity(c, c);
  cov = ((cov + cov.transpose()) * 0.5).eval();

  if (shrinkage == 0.0) {
    // no regularization safety net: reject numerically rank-deficient input
    const EigDecomp d = sym_eigh(cov);
    if (d.values[d.values.size() - 1] <= 1e-10 * std::abs(d.values[0]))
      throw std::runtime_error("trial_covariance: covariance is not positive definite (rank-deficient trial)");
  }
  return make_spd(std::move(cov));
}

// Arithmetic mean covariance per class id (CSP convention).
inline std::vector<SpdMatrix> class_covariances(const std::vector<SpdMatrix>& covs,
                                                const std::vector<int>& labels, int n_classes = -1) {
  if (covs.size() != labels.size())
    throw std::invalid_argument("class_covariances: covs and labels length mismatch");
  if (covs.empty()) throw std::invalid_argument("class_covariances: no covariances");
  if (n_classes < 0) {
    for (int y : labels) n_classes = std::max(n_classes, y + 1);
  }
  const int dim = covs[0].dim();

  std::vector<Matrix> sums(n_classes, Matrix::Zero(dim, dim));
  std::vector<int> counts(n_classes, 0);
  for (std::size_t i = 0; i < covs.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= n_classes) throw std::invalid_argument("class_covariances: label out of range");
    if (covs[i].dim() != dim) throw std::invalid_argument("class_covariances: dimension mismatch");
    sums[y] += covs[i].m;
    ++counts[y];
  }
  std::vector<SpdMatrix> means;
  means.reserve(n_classes);
  for (int y = 0; y < n_classes; ++y) {
    if (counts[y] == 0)
      throw std::invalid_argument("class_covariances: class " + std::to_string(y) + " is empty");
    means.push_back(make_spd(sums[y] / counts[y]));
  }
  return means;
}

// Common Spatial Patterns: rows of `filters` are generalized eigenvectors of
// (A1, A2), eigenvalues sorted descending. Filters are normalized so that
// l^T A2 l = 1.
struct CspFilters {
  Matrix filters;    // j × c
  Vector eigenvalues; // j, descending
  int n_filters() const { return static_cast<int>(filters.rows()); }
  int dim() const { return static_cast<int>(filters.cols()); }
};

// Solves A1 l = w A2 l by Cholesky whitening of A2 followed by a symmetric
// eigendecomposition. With j < c, keeps the j/2 filters with largest and j/2
// with smallest eigenvalue (both extremes discriminate).
inline CspFilters csp_fit(const SpdMatrix& a1, const SpdMatrix& a2, int j = -1) {
  const int c = a1.dim();
  if (a2.dim() != c) throw std::invalid_argument("csp_fit: dimension mismatch");
  if (j < 0) j = c;
  if (j < 1 || j > c) throw std::invalid_argument("csp_fit: j must lie in [1, c]");
  if (j < c && j % 2 != 0) throw std::invalid_argument("csp_fit: truncated j must be even");

  Eigen::LLT<Matrix> llt(a2.m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("csp_fit: A2 is not positive definite");
  const Matrix l = llt.matrixL();
  // W = L^{-1}, whitened S = W A1 W^T
  const Matrix w = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(c, c));
  Matrix s = w * a1.m * w.transpose();
  s = ((s + s.transpose()) * 0.5).eval();
  const EigDecomp d = sym_eigh(s);

  Matrix all_filters = d.vectors.transpose() * w; // row i solves the pencil with d.values[i]

  CspFilters out;
  out.filters.resize(j, c);
  out.eigenvalues.resize(j);
  if (j == c) {
    out.filters = all_filters;
    out.eigenvalues = d.values;
  } else {
    for (int i = 0; i < j / 2; ++i) { // largest eigenvalues
      out.filters.row(i) = all_filters.row(i);
      out.eigenvalues[i] = d.values[i];
    }
    for (int i = 0; i < j / 2; ++i) { // smallest, keeping descending order
      const int src = c - j / 2 + i;
      out.filters.row(j / 2 + i) = all_filters.row(src);
      out.eigenvalues[j / 2 + i] = d.values[src];
    }
  }

  for (int i = 0; i < j; ++i) { // deterministic sign: largest-|entry| positive
    int arg = 0;
    out.filters.row(i).cwiseAbs().maxCoeff(&arg);
    if (out.filters(i, arg) < 0.0) out.filters.row(i) = -out.filters.row(i);
  }
  return out;
}

inline Matrix csp_transform(const Matrix& trial, const CspFilters& filters) {
  if (trial.rows() != filters.dim())
    throw std::invalid_argument("csp_transform: trial channel count does not match filters");
  return filters.filters * trial;
}

// Variance of each CSP-filtered channel per trial; natural log when
// log_scale. Zero variances are floored at 1e-300 before the log and counted
// in *n_floored.
inline FeatureMatrix variance_features(const TrialSet& ts, const CspFilters& filters,
                                       bool log_scale = false, int* n_floored = nullptr) {
  const int j = filters.n_filters();
  FeatureMatrix feats(ts.n_trials(), j);
  int floored = 0;
  for (int i = 0; i < ts.n_trials(); ++i) {
    const Matrix y = csp_transform(ts.trials[i], filters);
    for (int r = 0; r < j; ++r) {
      const auto row = y.row(r);
      const double mean = row.mean();
      double var = (row.array() - mean).square().sum() / (y.cols() - 1.0);
      if (log_scale) {
        if (var < 1e-300) {
          var = 1e-300;
          ++floored;
        }
        feats(i, r) = std::log(var);
      } else {
        feats(i, r) = var;
      }
    }
  }
  if (n_floored) *n_floored = floored;
  return feats;
}

} // namespace isd
