#include "isd/csp.hpp"
#include "isd/rng.hpp"
#include "isd/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

using Catch::Approx;
using namespace isd;

namespace {

SpdMatrix random_spd(int dim, std::mt19937_64& rng, double jitter = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = gauss(rng);
  Matrix m = a * a.transpose() + jitter * Matrix::Identity(dim, dim);
  return make_spd(std::move(m));
}

// independent dense multiply, no Eigen expressions
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k)
      for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

} // namespace

TEST_CASE("trial_covariance estimates the spatial covariance", "[csp][covariance]") {
  SECTION("uncorrelated unit-variance channels give ~identity at large t") {
    auto rng = make_rng(1, "cov");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix trial(2, 10000);
    for (int ch = 0; ch < 2; ++ch)
      for (int s = 0; s < 10000; ++s) trial(ch, s) = gauss(rng);
    const SpdMatrix c = trial_covariance(trial, 0.0);
    REQUIRE(c.m(0, 0) == Approx(1.0).margin(0.1));
    REQUIRE(c.m(1, 1) == Approx(1.0).margin(0.1));
    REQUIRE(c.m(0, 1) == Approx(0.0).margin(0.1));
  }

  SECTION("constant trial has zero trace and fails even with shrinkage") {
    const Matrix trial = Matrix::Constant(3, 50, 2.0);
    REQUIRE_THROWS_AS(trial_covariance(trial, 0.1), std::runtime_error);
  }

  SECTION("nonzero trial with shrinkage is SPD") {
    auto rng = make_rng(2, "cov");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix trial(4, 3); // fewer samples than channels: rank-deficient raw
    for (int ch = 0; ch < 4; ++ch)
      for (int s = 0; s < 3; ++s) trial(ch, s) = gauss(rng);
    const SpdMatrix c = trial_covariance(trial, 0.1);
    const EigDecomp d = spd_eigh(c);
    REQUIRE(d.values[3] > 0.0);
  }

  SECTION("linearly dependent channels with zero shrinkage fail") {
    auto rng = make_rng(3, "cov");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix trial(2, 100);
    for (int s = 0; s < 100; ++s) trial(0, s) = gauss(rng);
    trial.row(1) = 2.0 * trial.row(0);
    REQUIRE_THROWS_AS(trial_covariance(trial, 0.0), std::runtime_error);
  }

  SECTION("output is exactly symmetric") {
    auto rng = make_rng(4, "cov");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix trial(5, 64);
    for (int ch = 0; ch < 5; ++ch)
      for (int s = 0; s < 64; ++s) trial(ch, s) = gauss(rng);
    const SpdMatrix c = trial_covariance(trial, 0.05);
    REQUIRE((c.m - c.m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("class_covariances averages per class", "[csp][covariance]") {
  auto rng = make_rng(5, "classcov");
  const SpdMatrix a = random_spd(3, rng);
  const SpdMatrix b = random_spd(3, rng);

  SECTION("singleton classes return their matrix") {
    const auto means = class_covariances({a, b}, {0, 1});
    REQUIRE((means[0].m - a.m).cwiseAbs().maxCoeff() == Approx(0.0).margin(1e-15));
    REQUIRE((means[1].m - b.m).cwiseAbs().maxCoeff() == Approx(0.0).margin(1e-15));
  }

  SECTION("duplicate matrices leave the mean unchanged") {
    const auto means = class_covariances({a, a}, {0, 0}, 1);
    REQUIRE((means[0].m - a.m).cwiseAbs().maxCoeff() == Approx(0.0).margin(1e-15));
  }

  SECTION("entrywise arithmetic mean of diagonals") {
    const SpdMatrix d1 = make_spd(Eigen::Vector2d(1.0, 2.0).asDiagonal().toDenseMatrix());
    const SpdMatrix d2 = make_spd(Eigen::Vector2d(3.0, 4.0).asDiagonal().toDenseMatrix());
    const auto means = class_covariances({d1, d2}, {0, 0}, 1);
    REQUIRE(means[0].m(0, 0) == Approx(2.0));
    REQUIRE(means[0].m(1, 1) == Approx(3.0));
  }

  SECTION("empty class is an error") {
    REQUIRE_THROWS_AS(class_covariances({a, b}, {0, 0}, 2), std::invalid_argument);
  }
}

TEST_CASE("csp_fit solves the generalized eigenproblem", "[csp]") {
  SECTION("identical classes give all eigenvalues 1") {
    auto rng = make_rng(6, "csp");
    const SpdMatrix a = random_spd(5, rng);
    const CspFilters f = csp_fit(a, a);
    for (int i = 0; i < 5; ++i) REQUIRE(f.eigenvalues[i] == Approx(1.0).margin(1e-10));
  }

  SECTION("diagonal case: eigenvalues {4, 1}, axis filters") {
    Matrix a1 = Matrix::Zero(2, 2);
    a1(0, 0) = 4.0;
    a1(1, 1) = 1.0;
    const CspFilters f = csp_fit(make_spd(a1), make_spd(Matrix::Identity(2, 2)));
    REQUIRE(f.eigenvalues[0] == Approx(4.0).margin(1e-12));
    REQUIRE(f.eigenvalues[1] == Approx(1.0).margin(1e-12));
    // filters align with the coordinate axes
    REQUIRE(std::abs(f.filters(0, 0)) == Approx(1.0).margin(1e-12));
    REQUIRE(std::abs(f.filters(0, 1)) == Approx(0.0).margin(1e-12));
    REQUIRE(std::abs(f.filters(1, 1)) == Approx(1.0).margin(1e-12));
  }

  SECTION("Rayleigh quotient matches each eigenvalue on random pairs") {
    auto rng = make_rng(7, "csp");
    for (int rep = 0; rep < 20; ++rep) {
      const int dim = 2 + rep % 7;
      const SpdMatrix a1 = random_spd(dim, rng);
      const SpdMatrix a2 = random_spd(dim, rng);
      const CspFilters f = csp_fit(a1, a2);

      for (int i = 0; i < dim; ++i) {
        const Vector l = f.filters.row(i).transpose();
        const double rayleigh = (l.dot(a1.m * l)) / (l.dot(a2.m * l));
        REQUIRE(rayleigh == Approx(f.eigenvalues[i]).epsilon(1e-8));
        // residual of the pencil equation, relative to ||A1||
        const double resid = (a1.m * l - f.eigenvalues[i] * (a2.m * l)).norm();
        REQUIRE(resid <= 1e-8 * a1.m.norm() * l.norm());
      }
      // eigenvalues descending; the top filter attains the maximum ratio
      for (int i = 1; i < dim; ++i) REQUIRE(f.eigenvalues[i] <= f.eigenvalues[i - 1] + 1e-12);
    }
  }

  SECTION("swapping the classes inverts the eigenvalues") {
    auto rng = make_rng(8, "csp");
    const SpdMatrix a1 = random_spd(6, rng);
    const SpdMatrix a2 = random_spd(6, rng);
    const CspFilters fwd = csp_fit(a1, a2);
    const CspFilters rev = csp_fit(a2, a1);
    for (int i = 0; i < 6; ++i)
      REQUIRE(rev.eigenvalues[i] == Approx(1.0 / fwd.eigenvalues[5 - i]).epsilon(1e-9));
  }

  SECTION("truncation keeps both spectral extremes") {
    auto rng = make_rng(9, "csp");
    const SpdMatrix a1 = random_spd(8, rng);
    const SpdMatrix a2 = random_spd(8, rng);
    const CspFilters full = csp_fit(a1, a2);
    const CspFilters cut = csp_fit(a1, a2, 4);
    REQUIRE(cut.n_filters() == 4);
    REQUIRE(cut.eigenvalues[0] == Approx(full.eigenvalues[0]));
    REQUIRE(cut.eigenvalues[1] == Approx(full.eigenvalues[1]));
    REQUIRE(cut.eigenvalues[2] == Approx(full.eigenvalues[6]));
    REQUIRE(cut.eigenvalues[3] == Approx(full.eigenvalues[7]));
  }

  SECTION("parameter errors") {
    auto rng = make_rng(10, "csp");
    const SpdMatrix a1 = random_spd(4, rng);
    const SpdMatrix a2 = random_spd(5, rng);
    REQUIRE_THROWS_AS(csp_fit(a1, a2), std::invalid_argument);
    const SpdMatrix b2 = random_spd(4, rng);
    REQUIRE_THROWS_AS(csp_fit(a1, b2, 3), std::invalid_argument); // odd truncation
    REQUIRE_THROWS_AS(csp_fit(a1, b2, 5), std::invalid_argument);
  }
}

TEST_CASE("csp_transform is the plain matrix product", "[csp]") {
  auto rng = make_rng(11, "transform");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix trial(4, 30);
  for (int ch = 0; ch < 4; ++ch)
    for (int s = 0; s < 30; ++s) trial(ch, s) = gauss(rng);

  SECTION("identity filters do nothing") {
    CspFilters ident{Matrix::Identity(4, 4), Vector::Ones(4)};
    REQUIRE((csp_transform(trial, ident) - trial).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("a basis-row filter selects that channel") {
    CspFilters sel{Matrix::Zero(1, 4), Vector::Ones(1)};
    sel.filters(0, 0) = 1.0;
    const Matrix out = csp_transform(trial, sel);
    REQUIRE(out.rows() == 1);
    REQUIRE((out.row(0) - trial.row(0)).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("row variances match a naive matmul oracle within 1e-12") {
    Matrix l(3, 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) l(i, j) = gauss(rng);
    CspFilters filters{l, Vector::Ones(3)};
    const Matrix fast = csp_transform(trial, filters);
    const Matrix slow = naive_matmul(l, trial);
    for (int i = 0; i < 3; ++i) {
      const double mf = fast.row(i).mean(), ms = slow.row(i).mean();
      const double vf = (fast.row(i).array() - mf).square().sum() / (fast.cols() - 1.0);
      const double vs = (slow.row(i).array() - ms).square().sum() / (slow.cols() - 1.0);
      REQUIRE(vf == Approx(vs).margin(1e-12));
    }
  }

  SECTION("dimension mismatch is an error") {
    CspFilters bad{Matrix::Identity(3, 3), Vector::Ones(3)};
    REQUIRE_THROWS_AS(csp_transform(trial, bad), std::invalid_argument);
  }
}

TEST_CASE("variance_features", "[csp]") {
  SECTION("unit-variance white channels with identity filters give ~1") {
    auto rng = make_rng(12, "varfeat");
    std::normal_distribution<double> gauss(0.0, 1.0);
    TrialSet ts;
    ts.fs = 100.0;
    ts.class_names = {"a"};
    Matrix trial(3, 5000);
    for (int ch = 0; ch < 3; ++ch)
      for (int s = 0; s < 5000; ++s) trial(ch, s) = gauss(rng);
    ts.trials.push_back(trial);
    ts.labels.push_back(0);

    CspFilters ident{Matrix::Identity(3, 3), Vector::Ones(3)};
    const FeatureMatrix f = variance_features(ts, ident, false);
    REQUIRE(f.cols() == 3);
    for (int ch = 0; ch < 3; ++ch) REQUIRE(f(0, ch) == Approx(1.0).margin(0.1));
  }

  SECTION("scaling a trial by 2 scales variances by 4 and shifts logs by ln 4") {
    SynthSpec spec;
    spec.n_classes = 1;
    spec.trials_per_class = 1;
    spec.n_channels = 4;
    spec.n_samples = 128;
    spec.seed = 77;
    TrialSet ts = synth_trialset(spec);
    TrialSet scaled = ts;
    scaled.trials[0] *= 2.0;

    CspFilters ident{Matrix::Identity(4, 4), Vector::Ones(4)};
    const FeatureMatrix base = variance_features(ts, ident, false);
    const FeatureMatrix big = variance_features(scaled, ident, false);
    const FeatureMatrix base_log = variance_features(ts, ident, true);
    const FeatureMatrix big_log = variance_features(scaled, ident, true);
    for (int ch = 0; ch < 4; ++ch) {
      REQUIRE(big(0, ch) == Approx(4.0 * base(0, ch)).epsilon(1e-12));
      REQUIRE(big_log(0, ch) - base_log(0, ch) == Approx(std::log(4.0)).margin(1e-12));
    }
  }

  SECTION("four filters give rows of length four") {
    SynthSpec spec;
    spec.n_classes = 2;
    spec.trials_per_class = 3;
    spec.n_channels = 6;
    spec.n_samples = 64;
    spec.seed = 78;
    const TrialSet ts = synth_trialset(spec);
    std::vector<SpdMatrix> covs;
    for (const Matrix& t : ts.trials) covs.push_back(trial_covariance(t, 0.05));
    const auto means = class_covariances(covs, ts.labels, 2);
    const CspFilters f = csp_fit(means[0], means[1], 4);
    REQUIRE(variance_features(ts, f).cols() == 4);
  }

  SECTION("zero variance with log is floored and flagged") {
    TrialSet ts;
    ts.fs = 10.0;
    ts.class_names = {"a"};
    ts.trials.push_back(Matrix::Constant(2, 16, 1.0));
    ts.labels.push_back(0);
    CspFilters ident{Matrix::Identity(2, 2), Vector::Ones(2)};
    int floored = 0;
    const FeatureMatrix f = variance_features(ts, ident, true, &floored);
    REQUIRE(floored == 2);
    REQUIRE(f(0, 0) == Approx(std::log(1e-300)));
  }
}
