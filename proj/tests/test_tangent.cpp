#include "isd/rng.hpp"
#include "isd/tangent.hpp"

#include <catch2/catch_amalgamated.hpp>

using Catch::Approx;
using namespace isd;

namespace {

SpdMatrix random_spd(int dim, std::mt19937_64& rng, double jitter = 0.5) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = gauss(rng);
  return make_spd((a * a.transpose() + jitter * Matrix::Identity(dim, dim)).eval());
}

Matrix diag(std::initializer_list<double> values) {
  Matrix m = Matrix::Zero(values.size(), values.size());
  int i = 0;
  for (double v : values) m(i, i) = v, ++i;
  return m;
}

double rel_err(const Matrix& got, const Matrix& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

} // namespace

TEST_CASE("spd_eigh reconstructs its input", "[tangent][eigh]") {
  SECTION("identity has unit eigenvalues") {
    const EigDecomp d = spd_eigh(make_spd(Matrix::Identity(4, 4)));
    for (int i = 0; i < 4; ++i) REQUIRE(d.values[i] == Approx(1.0));
  }

  SECTION("diag(4,1) decomposes along the axes") {
    const EigDecomp d = spd_eigh(make_spd(diag({4.0, 1.0})));
    REQUIRE(d.values[0] == Approx(4.0));
    REQUIRE(d.values[1] == Approx(1.0));
    REQUIRE(std::abs(d.vectors(0, 0)) == Approx(1.0).margin(1e-12));
    REQUIRE(std::abs(d.vectors(1, 1)) == Approx(1.0).margin(1e-12));
  }

  SECTION("random SPD: reconstruction and orthonormality within 1e-10") {
    auto rng = make_rng(1, "eigh");
    for (int rep = 0; rep < 10; ++rep) {
      const SpdMatrix c = random_spd(8, rng);
      const EigDecomp d = spd_eigh(c);
      const Matrix recon = d.vectors * d.values.asDiagonal() * d.vectors.transpose();
      REQUIRE(rel_err(recon, c.m) <= 1e-10);
      REQUIRE((d.vectors.transpose() * d.vectors - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <=
              1e-10);
      for (int i = 1; i < 8; ++i) REQUIRE(d.values[i] <= d.values[i - 1] + 1e-14);
    }
  }

  SECTION("non-symmetric input is rejected") {
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 0.0, 1.0;
    REQUIRE_THROWS_AS(sym_eigh(bad), std::invalid_argument);
  }
}

TEST_CASE("spd_func applies scalar functions through the eigenbasis", "[tangent][matfunc]") {
  SECTION("logm of the identity is zero") {
    const Matrix l = spd_logm(make_spd(Matrix::Identity(3, 3)));
    REQUIRE(l.cwiseAbs().maxCoeff() <= 1e-14);
  }

  SECTION("sqrtm of diag(4,9) is diag(2,3)") {
    const Matrix s = spd_sqrtm(make_spd(diag({4.0, 9.0})));
    REQUIRE(s(0, 0) == Approx(2.0).margin(1e-12));
    REQUIRE(s(1, 1) == Approx(3.0).margin(1e-12));
    REQUIRE(s(0, 1) == Approx(0.0).margin(1e-12));
  }

  SECTION("expm(logm(C)) recovers C within 1e-9 relative") {
    auto rng = make_rng(2, "matfunc");
    for (int rep = 0; rep < 10; ++rep) {
      const SpdMatrix c = random_spd(6, rng);
      REQUIRE(rel_err(sym_expm(spd_logm(c)), c.m) <= 1e-9);
    }
  }

  SECTION("sqrtm squares back; invsqrtm whitens") {
    auto rng = make_rng(3, "matfunc");
    const SpdMatrix c = random_spd(5, rng);
    const Matrix half = spd_sqrtm(c);
    REQUIRE(rel_err(half * half, c.m) <= 1e-9);
    const Matrix w = spd_invsqrtm(c);
    REQUIRE(rel_err(w * c.m * w, Matrix::Identity(5, 5)) <= 1e-9);
  }

  SECTION("log of a non-definite symmetric matrix is a domain error") {
    Matrix sym = diag({1.0, -2.0});
    REQUIRE_THROWS_AS(sym_func(sym, MatFunc::Log), std::domain_error);
    REQUIRE_THROWS_AS(sym_func(sym, MatFunc::Sqrt), std::domain_error);
    REQUIRE_NOTHROW(sym_func(sym, MatFunc::Exp));
  }
}

TEST_CASE("mean_covariance", "[tangent][mean]") {
  auto rng = make_rng(4, "mean");

  SECTION("singleton mean is the matrix itself, both modes") {
    const SpdMatrix c = random_spd(4, rng);
    REQUIRE(rel_err(mean_covariance({c}, MeanMode::Geometric).mean.m, c.m) <= 1e-14);
    REQUIRE(rel_err(mean_covariance({c}, MeanMode::Arithmetic).mean.m, c.m) <= 1e-14);
  }

  SECTION("arithmetic mode averages entrywise") {
    const SpdMatrix a = make_spd(diag({1.0, 2.0}));
    const SpdMatrix b = make_spd(diag({3.0, 4.0}));
    const MeanResult r = mean_covariance({a, b}, MeanMode::Arithmetic);
    REQUIRE(r.mean.m(0, 0) == Approx(2.0));
    REQUIRE(r.mean.m(1, 1) == Approx(3.0));
  }

  SECTION("geometric mean of {diag(1,4), diag(4,1)} is diag(2,2)") {
    const SpdMatrix a = make_spd(diag({1.0, 4.0}));
    const SpdMatrix b = make_spd(diag({4.0, 1.0}));
    const MeanResult r = mean_covariance({a, b}, MeanMode::Geometric);
    REQUIRE(r.converged);
    REQUIRE(rel_err(r.mean.m, diag({2.0, 2.0})) <= 1e-8);
  }

  SECTION("commuting diagonals reduce to the scalar geometric mean") {
    const SpdMatrix a = make_spd(diag({1.0, 9.0, 16.0}));
    const SpdMatrix b = make_spd(diag({4.0, 1.0, 25.0}));
    const MeanResult r = mean_covariance({a, b}, MeanMode::Geometric);
    REQUIRE(r.mean.m(0, 0) == Approx(2.0).margin(1e-10));
    REQUIRE(r.mean.m(1, 1) == Approx(3.0).margin(1e-10));
    REQUIRE(r.mean.m(2, 2) == Approx(20.0).margin(1e-9));
  }

  SECTION("congruence invariance: mean(W C W^T) = W mean(C) W^T") {
    std::vector<SpdMatrix> covs;
    for (int i = 0; i < 5; ++i) covs.push_back(random_spd(4, rng));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix w(4, 4);
    do {
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) w(i, j) = gauss(rng);
    } while (std::abs(w.determinant()) < 0.1);

    std::vector<SpdMatrix> mapped;
    for (const SpdMatrix& c : covs) mapped.push_back(make_spd((w * c.m * w.transpose()).eval(), 1e-8));

    const Matrix lhs = mean_covariance(mapped, MeanMode::Geometric).mean.m;
    const Matrix rhs = w * mean_covariance(covs, MeanMode::Geometric).mean.m * w.transpose();
    REQUIRE(rel_err(lhs, rhs) <= 1e-6);
  }

  SECTION("two-matrix determinant identity") {
    const SpdMatrix a = random_spd(3, rng);
    const SpdMatrix b = random_spd(3, rng);
    const MeanResult r = mean_covariance({a, b}, MeanMode::Geometric);
    REQUIRE(r.mean.m.determinant() ==
            Approx(std::sqrt(a.m.determinant() * b.m.determinant())).epsilon(1e-8));
  }

  SECTION("empty input is an error") {
    REQUIRE_THROWS_AS(mean_covariance({}), std::invalid_argument);
  }

  SECTION("hitting max_iter returns the last iterate flagged as unconverged") {
    const SpdMatrix a = make_spd(diag({1.0, 100.0}));
    const SpdMatrix b = make_spd(diag({100.0, 1.0}));
    const MeanResult r = mean_covariance({a, b}, MeanMode::Geometric, 1e-15, 1);
    REQUIRE_FALSE(r.converged);
    REQUIRE(r.iterations == 1);
    REQUIRE(r.mean.dim() == 2); // usable iterate still returned
  }
}

TEST_CASE("tangent_project implements the projection exactly", "[tangent]") {
  auto rng = make_rng(5, "project");

  SECTION("projecting the base point gives zero") {
    const SpdMatrix cm = random_spd(6, rng);
    REQUIRE(tangent_project(cm, cm).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SECTION("identity base reduces to the matrix log") {
    const SpdMatrix ci = make_spd(diag({4.0, 1.0}));
    const SpdMatrix cm = make_spd(Matrix::Identity(2, 2));
    const Matrix p = tangent_project(ci, cm);
    REQUIRE(p(0, 0) == Approx(std::log(4.0)).margin(1e-12));
    REQUIRE(p(1, 1) == Approx(0.0).margin(1e-12));
    REQUIRE(p(0, 1) == Approx(0.0).margin(1e-12));
  }

  SECTION("round trip through the inverse map within 1e-8 relative") {
    for (int rep = 0; rep < 10; ++rep) {
      const SpdMatrix ci = random_spd(5, rng);
      const SpdMatrix cm = random_spd(5, rng);
      const Matrix p = tangent_project(ci, cm);
      REQUIRE(rel_err(tangent_unproject(p, cm).m, ci.m) <= 1e-8);
      // whitened variant round-trips too
      const Matrix pw = tangent_project(ci, cm, true);
      REQUIRE(rel_err(tangent_unproject(pw, cm, true).m, ci.m) <= 1e-8);
    }
  }

  SECTION("first-order consistency: P(Cm + eS) ~ eS + O(e^2)") {
    const SpdMatrix cm = random_spd(4, rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix s(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) s(i, j) = gauss(rng);
    s = ((s + s.transpose()) * 0.5).eval();
    s /= s.norm();

    double prev_ratio = -1.0;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      const SpdMatrix ci = make_spd((cm.m + eps * s).eval());
      const Matrix p = tangent_project(ci, cm);
      const double err = (p - eps * s).norm();
      const double ratio = err / (eps * eps); // bounded if error is O(eps^2)
      if (prev_ratio > 0.0) REQUIRE(ratio <= prev_ratio * 10.0);
      prev_ratio = ratio;
      REQUIRE(err <= 50.0 * eps * eps * cm.m.norm());
    }
  }
}

TEST_CASE("vectorize_tangent is an isometric flattening", "[tangent][vectorize]") {
  SECTION("definition on a 2x2 example") {
    Matrix p(2, 2);
    p << 1.0, 2.0, 2.0, 3.0;
    const Vector v = vectorize_tangent(p);
    REQUIRE(v.size() == 3);
    REQUIRE(v[0] == Approx(1.0));
    REQUIRE(v[1] == Approx(2.0 * std::sqrt(2.0)));
    REQUIRE(v[2] == Approx(3.0));
  }

  SECTION("printed vector lengths: 60 channels -> 1830, 6 -> 21") {
    REQUIRE(tangent_dim(60) == 1830);
    REQUIRE(tangent_dim(6) == 21);
    REQUIRE(vectorize_tangent(Matrix::Identity(60, 60)).size() == 1830);
    REQUIRE(vectorize_tangent(Matrix::Identity(6, 6)).size() == 21);
  }

  SECTION("norm preservation and linearity") {
    auto rng = make_rng(6, "vec");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix a(5, 5), b(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) { a(i, j) = gauss(rng); b(i, j) = gauss(rng); }
    a = ((a + a.transpose()) * 0.5).eval();
    b = ((b + b.transpose()) * 0.5).eval();

    REQUIRE(vectorize_tangent(a).norm() == Approx(a.norm()).margin(1e-10));
    const Vector lin = vectorize_tangent((2.0 * a + 3.0 * b).eval());
    const Vector composed = 2.0 * vectorize_tangent(a) + 3.0 * vectorize_tangent(b);
    REQUIRE((lin - composed).cwiseAbs().maxCoeff() <= 1e-12);
    // Frobenius inner product preserved
    const double frob = (a.array() * b.array()).sum();
    REQUIRE(vectorize_tangent(a).dot(vectorize_tangent(b)) == Approx(frob).margin(1e-10));
  }

  SECTION("non-symmetric input is rejected") {
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 0.0, 1.0;
    REQUIRE_THROWS_AS(vectorize_tangent(bad), std::invalid_argument);
  }
}

TEST_CASE("tangent_features stacks projections row-wise", "[tangent]") {
  auto rng = make_rng(7, "feats");

  SECTION("the base point maps to an all-zero row") {
    const SpdMatrix cm = random_spd(4, rng);
    const FeatureMatrix f = tangent_features({cm}, cm);
    REQUIRE(f.rows() == 1);
    REQUIRE(f.cwiseAbs().maxCoeff() <= 1e-10);
  }

  SECTION("row norms equal projection Frobenius norms") {
    const SpdMatrix cm = random_spd(4, rng);
    std::vector<SpdMatrix> covs;
    for (int i = 0; i < 6; ++i) covs.push_back(random_spd(4, rng));
    const FeatureMatrix f = tangent_features(covs, cm);
    for (int i = 0; i < 6; ++i) {
      const double pn = tangent_project(covs[i], cm).norm();
      REQUIRE(f.row(i).norm() == Approx(pn).margin(1e-10));
    }
  }

  SECTION("shape: 100 random SPD 8x8 -> [100, 36]") {
    const SpdMatrix cm = random_spd(8, rng);
    std::vector<SpdMatrix> covs;
    for (int i = 0; i < 100; ++i) covs.push_back(random_spd(8, rng));
    const FeatureMatrix f = tangent_features(covs, cm);
    REQUIRE(f.rows() == 100);
    REQUIRE(f.cols() == 36);
  }
}
