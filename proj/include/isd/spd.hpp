#pragma once

#include "isd/core.hpp"

#include <cmath>

namespace isd {

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// Symmetric positive-definite matrix (a trial's spatial covariance).
// Construct through make_spd so symmetry and positive definiteness hold.
struct SpdMatrix {
  Matrix m;
  int dim() const { return static_cast<int>(m.rows()); }
};

inline SpdMatrix make_spd(Matrix m, double sym_tol = 1e-10) {
  if (!is_symmetric(m, sym_tol)) throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
  m = ((m + m.transpose()) * 0.5).eval(); // exact symmetry
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("SpdMatrix: matrix is not positive definite");
  return SpdMatrix{std::move(m)};
}

struct EigDecomp {
  Vector values;  // descending
  Matrix vectors; // orthonormal columns, vectors.col(i) pairs with values[i]
};

// Symmetric eigendecomposition with eigenvalues sorted descending:
// C = V diag(w) V^T.
inline EigDecomp sym_eigh(const Matrix& m) {
  if (!is_symmetric(m)) throw std::invalid_argument("sym_eigh: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(((m + m.transpose()) * 0.5).eval());
  if (solver.info() != Eigen::Success) throw std::runtime_error("sym_eigh: eigensolver failed");
  const Eigen::Index n = m.rows();
  EigDecomp d;
  d.values.resize(n);
  d.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) { // Eigen sorts ascending; flip
    d.values[i] = solver.eigenvalues()[n - 1 - i];
    d.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return d;
}

inline EigDecomp spd_eigh(const SpdMatrix& c) { return sym_eigh(c.m); }

enum class MatFunc { Log, Exp, Sqrt, InvSqrt, Inv };

// f applied through the eigendecomposition: V diag(f(w)) V^T. Log, Sqrt,
// InvSqrt and Inv require positive eigenvalues; Exp accepts any symmetric
// input.
inline Matrix sym_func(const Matrix& m, MatFunc f) {
  const EigDecomp d = sym_eigh(m);
  Vector fw(d.values.size());
  for (Eigen::Index i = 0; i < d.values.size(); ++i) {
    const double w = d.values[i];
    switch (f) {
      case MatFunc::Log:
        if (w <= 0.0) throw std::domain_error("sym_func: log needs positive eigenvalues");
        fw[i] = std::log(w);
        break;
      case MatFunc::Exp:
        fw[i] = std::exp(w);
        break;
      case MatFunc::Sqrt:
        if (w <= 0.0) throw std::domain_error("sym_func: sqrt needs positive eigenvalues");
        fw[i] = std::sqrt(w);
        break;
      case MatFunc::InvSqrt:
        if (w <= 0.0) throw std::domain_error("sym_func: invsqrt needs positive eigenvalues");
        fw[i] = 1.0 / std::sqrt(w);
        break;
      case MatFunc::Inv:
        if (w <= 0.0) throw std::domain_error("sym_func: inv needs positive eigenvalues");
        fw[i] = 1.0 / w;
        break;
    }
  }
  Matrix out = d.vectors * fw.asDiagonal() * d.vectors.transpose();
  return ((out + out.transpose()) * 0.5).eval();
}

inline Matrix spd_func(const SpdMatrix& c, MatFunc f) { return sym_func(c.m, f); }

inline Matrix spd_logm(const SpdMatrix& c) { return spd_func(c, MatFunc::Log); }
inline Matrix sym_expm(const Matrix& s) { return sym_func(s, MatFunc::Exp); }
inline Matrix spd_sqrtm(const SpdMatrix& c) { return spd_func(c, MatFunc::Sqrt); }
inline Matrix spd_invsqrtm(const SpdMatrix& c) { return spd_func(c, MatFunc::InvSqrt); }

} // namespace isd
