#pragma once

#include "isd/core.hpp"
#include "isd/spd.hpp"

#include <fstream>

namespace isd {

// PCA of the centered data covariance A = X_c^T X_c / m (1/m normalization).
// Components are orthonormal rows sorted by explained variance, with a
// deterministic sign convention (largest-magnitude entry positive).
struct PcaModel {
  Vector mean;
  Matrix components;          // n_components × n_features
  Vector explained_variance;  // descending, >= 0
  int n_components() const { return static_cast<int>(components.rows()); }
  int n_features() const { return static_cast<int>(components.cols()); }
};

inline PcaModel pca_fit(const FeatureMatrix& x, int n_components) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n < 1 || d < 1) throw std::invalid_argument("pca_fit: empty matrix");
  if (n_components < 1 || n_components > std::min(n, d))
    throw std::invalid_argument("pca_fit: n_components must lie in [1, min(n_trials, n_features)]");

  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - model.mean.transpose();

  model.components.resize(n_components, d);
  model.explained_variance.resize(n_components);

  if (d <= n) {
    const Matrix cov = centered.transpose() * centered / static_cast<double>(n);
    const EigDecomp e = sym_eigh(cov);
    for (int k = 0; k < n_components; ++k) {
      model.components.row(k) = e.vectors.col(k).transpose();
      model.explained_variance[k] = std::max(0.0, e.values[k]);
    }
  } else {
    // more features than rows: eigendecompose the n×n Gram matrix instead
    const Matrix gram = centered * centered.transpose() / static_cast<double>(n);
    const EigDecomp e = sym_eigh(gram);
    for (int k = 0; k < n_components; ++k) {
      const double lambda = e.values[k];
      if (lambda <= 1e-12 * std::max(e.values[0], 0.0))
        throw std::runtime_error("pca_fit: requested components exceed numerical rank");
      model.components.row(k) =
          (centered.transpose() * e.vectors.col(k) / std::sqrt(lambda * n)).transpose();
      model.explained_variance[k] = lambda;
    }
  }

  for (int k = 0; k < n_components; ++k) {
    int arg = 0;
    model.components.row(k).cwiseAbs().maxCoeff(&arg);
    if (model.components(k, arg) < 0.0) model.components.row(k) = -model.components.row(k);
  }
  return model;
}

inline FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.n_features())
    throw std::invalid_argument("pca_transform: feature width does not match model");
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

inline FeatureMatrix pca_inverse(const PcaModel& model, const FeatureMatrix& y) {
  if (y.cols() != model.n_components())
    throw std::invalid_argument("pca_inverse: width does not match n_components");
  return (y * model.components).rowwise() + model.mean.transpose();
}

// Column-wise standardization fitted on training rows; stds floored at 1e-12
// so constant columns map to zero.
struct Standardizer {
  Vector mean;
  Vector std;
};

inline Standardizer standardize_fit(const FeatureMatrix& x) {
  if (x.rows() < 1) throw std::invalid_argument("standardize_fit: empty matrix");
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - s.mean.transpose();
  s.std = (centered.array().square().colwise().sum() / x.rows()).sqrt().transpose();
  for (Eigen::Index j = 0; j < s.std.size(); ++j) {
    if (s.std[j] < 1e-12) {
      // constant column: anchor the mean to a member value so the column
      // maps to exact zero instead of rounding noise over the floored std
      s.mean[j] = x(0, j);
      s.std[j] = 1e-12;
    }
  }
  return s;
}

inline FeatureMatrix standardize_apply(const Standardizer& s, const FeatureMatrix& x) {
  if (x.cols() != s.mean.size())
    throw std::invalid_argument("standardize_apply: feature width does not match");
  return ((x.rowwise() - s.mean.transpose()).array().rowwise() / s.std.transpose().array()).matrix();
}

// Writes a 2-component projection as "x,y,label" delimited text for external
// plotting.
inline void export_2d(const PcaModel& model, const FeatureMatrix& x, const std::vector<int>& labels,
                      const std::string& path) {
  if (model.n_components() != 2) throw std::invalid_argument("export_2d: model must have exactly 2 components");
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw std::invalid_argument("export_2d: labels length does not match rows");
  const FeatureMatrix proj = pca_transform(model, x);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_2d: cannot open for writing: " + path);
  os << "x,y,label\n";
  os.precision(12);
  for (Eigen::Index i = 0; i < proj.rows(); ++i)
    os << proj(i, 0) << "," << proj(i, 1) << "," << labels[i] << "\n";
  if (!os) throw std::runtime_error("export_2d: write failed: " + path);
}

} // namespace isd
