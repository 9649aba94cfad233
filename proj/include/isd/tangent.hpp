#pragma once

#include "isd/core.hpp"
#include "isd/spd.hpp"

namespace isd {

enum class MeanMode { Geometric, Arithmetic };

struct MeanResult {
  SpdMatrix mean;
  int iterations{0};
  bool converged{true};
};

// Mean of covariance matrices. Geometric mode is the affine-invariant
// Fréchet mean computed by fixed-point iteration
//   C <- C^{1/2} expm( mean_i logm(C^{-1/2} C_i C^{-1/2}) ) C^{1/2},
// initialized at the arithmetic mean and stopped when the Frobenius norm of
// the tangent-mean update drops below tol. Non-convergence returns the last
// iterate flagged via MeanResult::converged.
inline MeanResult mean_covariance(const std::vector<SpdMatrix>& covs,
                                  MeanMode mode = MeanMode::Geometric,
                                  double tol = 1e-8, int max_iter = 50) {
  if (covs.empty()) throw std::invalid_argument("mean_covariance: no matrices");
  const int dim = covs[0].dim();
  for (const SpdMatrix& c : covs)
    if (c.dim() != dim) throw std::invalid_argument("mean_covariance: dimension mismatch");

  Matrix arith = Matrix::Zero(dim, dim);
  for (const SpdMatrix& c : covs) arith += c.m;
  arith /= static_cast<double>(covs.size());

  if (mode == MeanMode::Arithmetic || covs.size() == 1)
    return {make_spd(std::move(arith)), 0, true};

  SpdMatrix mean = make_spd(std::move(arith));
  for (int it = 1; it <= max_iter; ++it) {
    const Matrix half = spd_sqrtm(mean);
    const Matrix inv_half = spd_invsqrtm(mean);

    Matrix tangent_mean = Matrix::Zero(dim, dim);
    for (const SpdMatrix& c : covs) {
      Matrix whitened = inv_half * c.m * inv_half;
      whitened = ((whitened + whitened.transpose()) * 0.5).eval();
      tangent_mean += sym_func(whitened, MatFunc::Log);
    }
    tangent_mean /= static_cast<double>(covs.size());

    mean = make_spd(half * sym_expm(tangent_mean) * half, 1e-8);
    if (tangent_mean.norm() <= tol) return {std::move(mean), it, true};
  }
  return {std::move(mean), max_iter, false};
}

// Tangent-space projection at base point C_m:
//   P_i = C_m^{1/2} logm(C_m^{-1/2} C_i C_m^{-1/2}) C_m^{1/2}.
// The whitened variant omits the outer congruence (returns the logm alone).
inline Matrix tangent_project(const SpdMatrix& ci, const SpdMatrix& cm, bool whitened = false) {
  if (ci.dim() != cm.dim()) throw std::invalid_argument("tangent_project: dimension mismatch");
  const Matrix inv_half = spd_invsqrtm(cm);
  Matrix whitened_ci = inv_half * ci.m * inv_half;
  whitened_ci = ((whitened_ci + whitened_ci.transpose()) * 0.5).eval();
  const Matrix logw = sym_func(whitened_ci, MatFunc::Log);
  if (whitened) return logw;
  const Matrix half = spd_sqrtm(cm);
  Matrix p = half * logw * half;
  return ((p + p.transpose()) * 0.5).eval();
}

// Inverse of tangent_project: recovers C_i from P_i at base point C_m.
inline SpdMatrix tangent_unproject(const Matrix& p, const SpdMatrix& cm, bool whitened = false) {
  if (p.rows() != cm.dim() || p.cols() != cm.dim())
    throw std::invalid_argument("tangent_unproject: dimension mismatch");
  const Matrix half = spd_sqrtm(cm);
  if (whitened) return make_spd(half * sym_expm(p) * half, 1e-8);
  const Matrix inv_half = spd_invsqrtm(cm);
  Matrix inner = inv_half * p * inv_half;
  inner = ((inner + inner.transpose()) * 0.5).eval();
  return make_spd(half * sym_expm(inner) * half, 1e-8);
}

// Flattens a symmetric matrix to its upper triangle, row-major, with
// off-diagonal entries scaled by sqrt(2): a linear isometry under the
// Frobenius inner product. Length c(c+1)/2.
inline Vector vectorize_tangent(const Matrix& p) {
  if (!is_symmetric(p)) throw std::invalid_argument("vectorize_tangent: matrix is not symmetric");
  const int c = static_cast<int>(p.rows());
  Vector v(c * (c + 1) / 2);
  const double root2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < c; ++i)
    for (int j = i; j < c; ++j) v[k++] = i == j ? p(i, j) : root2 * 0.5 * (p(i, j) + p(j, i));
  return v;
}

inline int tangent_dim(int channels) { return channels * (channels + 1) / 2; }

// Row i = vectorize_tangent(tangent_project(covs[i], cm)).
inline FeatureMatrix tangent_features(const std::vector<SpdMatrix>& covs, const SpdMatrix& cm,
                                      bool whitened = false) {
  if (covs.empty()) throw std::invalid_argument("tangent_features: no covariances");
  FeatureMatrix feats(static_cast<Eigen::Index>(covs.size()), tangent_dim(cm.dim()));
  for (std::size_t i = 0; i < covs.size(); ++i)
    feats.row(static_cast<Eigen::Index>(i)) = vectorize_tangent(tangent_project(covs[i], cm, whitened)).transpose();
  return feats;
}

} // namespace isd
