#pragma once

#include "isd/core.hpp"
#include "isd/csp.hpp"
#include "isd/dataset.hpp"
#include "isd/dsp.hpp"
#include "isd/nn.hpp"
#include "isd/pca.hpp"
#include "isd/rng.hpp"
#include "isd/tangent.hpp"

#include <chrono>
#include <future>
#include <memory>
#include <optional>

namespace isd {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
  int correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / preds.size();
}

// Entry (i, j) counts true class i predicted as j.
inline Eigen::MatrixXi confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                        int n_classes) {
  if (preds.size() != labels.size()) throw std::invalid_argument("confusion_matrix: length mismatch");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes || preds[i] < 0 || preds[i] >= n_classes)
      throw std::runtime_error("confusion_matrix: label out of range");
    ++m(labels[i], preds[i]);
  }
  return m;
}

inline double chance_level(int n_classes) {
  if (n_classes < 2) throw std::invalid_argument("chance_level: need at least 2 classes");
  return 1.0 / n_classes;
}

struct RocResult {
  std::vector<std::pair<double, double>> points; // (fpr, tpr), threshold descending
  double auc{0.0};
};

// ROC curve over sorted unique score thresholds; AUC via the rank-statistic
// formulation (ties get averaged ranks), which equals the trapezoidal area.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("roc_auc: labels must be binary 0/1");
    n_pos += y;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: both classes must be present");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // averaged ranks over tied scores
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }

  RocResult r;
  r.auc = (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (static_cast<double>(n_pos) * n_neg);

  // curve from highest threshold down
  r.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = n; i > 0;) {
    std::size_t j = i;
    while (j > 0 && scores[order[j - 1]] == scores[order[i - 1]]) --j;
    for (std::size_t k = j; k < i; ++k) {
      if (labels[order[k]] == 1) ++tp; else ++fp;
    }
    r.points.emplace_back(static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos);
    i = j;
  }
  return r;
}

// Macro-averaged one-vs-rest AUC from a probability matrix.
inline double macro_ovr_auc(const Matrix& probs, const std::vector<int>& labels) {
  const int n_classes = static_cast<int>(probs.cols());
  double total = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    std::vector<double> scores(probs.rows());
    std::vector<int> binary(probs.rows());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      scores[i] = probs(i, c);
      binary[i] = labels[i] == c ? 1 : 0;
    }
    total += roc_auc(scores, binary).auc;
  }
  return total / n_classes;
}

// ---------------------------------------------------------------------------
// Pipeline specification
// ---------------------------------------------------------------------------

enum class FeatureKind { Tangent, CspVariance, Dft, Spectrogram, Stats };

struct FeatureParams {
  // tangent
  double shrinkage{0.05};
  bool whitened{false};
  MeanMode mean_mode{MeanMode::Geometric};
  // csp_variance
  int csp_filters{-1}; // -1 keeps all channels
  bool csp_log{false};
  // dft
  double max_hz{40.0};
  bool complex_pairs{false};
  // spectrogram
  SpectrogramSpec spectrogram{};
};

struct ClassifierSpec {
  enum class Kind { Mlp, NearestMean };
  Kind kind{Kind::Mlp};
  TrainConfig train{};
  int bagging{0}; // 0 disables bagging; otherwise estimator count
  double bagging_fraction{1.0};
};

struct PipelineSpec {
  std::optional<FilterSpec> filter;
  std::optional<double> resample_hz;
  std::optional<int> trim;
  FeatureKind features{FeatureKind::Tangent};
  FeatureParams params{};
  bool standardize{true};
  std::optional<int> pca;
  ClassifierSpec classifier{};
  std::uint64_t seed{0};
};

// ---------------------------------------------------------------------------
// Per-fold feature fitting. A FeatureSource owns whatever can be computed
// per trial up front; fit() builds the training-split artifacts (covariance
// mean, CSP filters) and returns an immutable transformer so folds can run
// concurrently. Standardizer, PCA and the classifier are fitted downstream,
// also on the training split only.
// ---------------------------------------------------------------------------

struct FittedFeatures {
  virtual ~FittedFeatures() = default;
  virtual FeatureMatrix transform(const std::vector<int>& idx) const = 0;
};

struct FeatureSource {
  virtual ~FeatureSource() = default;
  virtual int rows() const = 0;
  virtual std::unique_ptr<FittedFeatures> fit(const std::vector<int>& train_idx) const = 0;
};

namespace detail {

struct TangentFitted final : FittedFeatures {
  const std::vector<SpdMatrix>* covs;
  SpdMatrix mean;
  bool whitened;
  FeatureMatrix transform(const std::vector<int>& idx) const override {
    std::vector<SpdMatrix> subset;
    subset.reserve(idx.size());
    for (int i : idx) subset.push_back((*covs)[i]);
    return tangent_features(subset, mean, whitened);
  }
};

struct CspFitted final : FittedFeatures {
  const std::vector<Matrix>* trials;
  CspFilters filters;
  bool log_scale;
  FeatureMatrix transform(const std::vector<int>& idx) const override {
    FeatureMatrix feats(idx.size(), filters.n_filters());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const Matrix y = csp_transform((*trials)[idx[r]], filters);
      for (int f = 0; f < filters.n_filters(); ++f) {
        const double mean = y.row(f).mean();
        double var = (y.row(f).array() - mean).square().sum() / (y.cols() - 1.0);
        feats(r, f) = log_scale ? std::log(std::max(var, 1e-300)) : var;
      }
    }
    return feats;
  }
};

struct PrecomputedFitted final : FittedFeatures {
  const FeatureMatrix* x;
  FeatureMatrix transform(const std::vector<int>& idx) const override {
    FeatureMatrix out(idx.size(), x->cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(r) = x->row(idx[r]);
    return out;
  }
};

} // namespace detail

class TrialFeatureSource final : public FeatureSource {
 public:
  TrialFeatureSource(const TrialSet& ts, FeatureKind kind, const FeatureParams& params)
      : ts_(ts), kind_(kind), params_(params) {
    switch (kind_) {
      case FeatureKind::Tangent:
      case FeatureKind::CspVariance:
        covs_.reserve(ts.trials.size());
        for (const Matrix& trial : ts.trials) covs_.push_back(trial_covariance(trial, params.shrinkage));
        break;
      case FeatureKind::Dft:
        precomputed_ = dft_features(ts, params.max_hz, params.complex_pairs);
        break;
      case FeatureKind::Spectrogram:
        precomputed_ = spectrogram_features(ts, params.spectrogram);
        break;
      case FeatureKind::Stats:
        precomputed_ = statistical_features(ts);
        break;
    }
  }

  int rows() const override { return ts_.n_trials(); }

  std::unique_ptr<FittedFeatures> fit(const std::vector<int>& train_idx) const override {
    switch (kind_) {
      case FeatureKind::Tangent: {
        std::vector<SpdMatrix> train_covs;
        train_covs.reserve(train_idx.size());
        for (int i : train_idx) train_covs.push_back(covs_[i]);
        auto fitted = std::make_unique<detail::TangentFitted>();
        fitted->covs = &covs_;
        fitted->mean = mean_covariance(train_covs, params_.mean_mode).mean;
        fitted->whitened = params_.whitened;
        return fitted;
      }
      case FeatureKind::CspVariance: {
        std::vector<SpdMatrix> train_covs;
        std::vector<int> train_labels;
        for (int i : train_idx) {
          train_covs.push_back(covs_[i]);
          train_labels.push_back(ts_.labels[i]);
        }
        const auto per_class = class_covariances(train_covs, train_labels, 2);
        auto fitted = std::make_unique<detail::CspFitted>();
        fitted->trials = &ts_.trials;
        fitted->filters = csp_fit(per_class[0], per_class[1], params_.csp_filters);
        fitted->log_scale = params_.csp_log;
        return fitted;
      }
      default: {
        auto fitted = std::make_unique<detail::PrecomputedFitted>();
        fitted->x = &precomputed_;
        return fitted;
      }
    }
  }

  // fitted tangent mean for a given training split (leakage diagnostics)
  Matrix fitted_tangent_mean(const std::vector<int>& train_idx) const {
    if (kind_ != FeatureKind::Tangent) throw std::logic_error("not a tangent source");
    auto fitted = fit(train_idx);
    return static_cast<const detail::TangentFitted&>(*fitted).mean.m;
  }

 private:
  const TrialSet& ts_;
  FeatureKind kind_;
  FeatureParams params_;
  std::vector<SpdMatrix> covs_;
  FeatureMatrix precomputed_;
};

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct EvalReport {
  int k{0};
  std::uint64_t seed{0};
  std::vector<double> fold_accuracy;
  double mean_accuracy{0.0};
  double std_accuracy{0.0}; // population std over folds
  Eigen::MatrixXi confusion; // pooled over folds
  std::vector<std::pair<double, double>> roc_points; // binary tasks only
  double auc{std::numeric_limits<double>::quiet_NaN()};       // binary tasks only
  double auc_macro{std::numeric_limits<double>::quiet_NaN()}; // macro one-vs-rest
  double chance{0.0};
  int feature_dim{0};
  std::vector<double> fold_seconds;
  PipelineSpec spec;
};

inline void validate(const PipelineSpec& spec, int n_classes) {
  if (spec.features == FeatureKind::CspVariance && n_classes != 2)
    throw std::invalid_argument("PipelineSpec: csp_variance features require a 2-class task");
  if (spec.pca && *spec.pca < 1) throw std::invalid_argument("PipelineSpec: pca components must be >= 1");
  validate(spec.classifier.train);
}

namespace detail {

struct FoldOutcome {
  std::vector<int> test_idx;
  std::vector<int> preds;
  Matrix probs;
  double seconds{0.0};
  int feature_dim{0};
};

inline FoldOutcome run_fold(const FeatureSource& source, const std::vector<int>& labels, int n_classes,
                            const PipelineSpec& spec, const FoldPlan& plan, int fold) {
  const auto start = std::chrono::steady_clock::now();
  FoldOutcome out;
  const std::vector<int> train_idx = fold_indices(plan, fold, true);
  out.test_idx = fold_indices(plan, fold, false);

  const auto fitted = source.fit(train_idx);
  FeatureMatrix xtr = fitted->transform(train_idx);
  FeatureMatrix xte = fitted->transform(out.test_idx);
  out.feature_dim = static_cast<int>(xtr.cols());

  std::vector<int> ytr;
  ytr.reserve(train_idx.size());
  for (int i : train_idx) ytr.push_back(labels[i]);

  if (spec.standardize) {
    const Standardizer s = standardize_fit(xtr);
    xtr = standardize_apply(s, xtr);
    xte = standardize_apply(s, xte);
  }
  if (spec.pca) {
    const PcaModel p = pca_fit(xtr, *spec.pca);
    xtr = pca_transform(p, xtr);
    xte = pca_transform(p, xte);
  }

  if (spec.classifier.kind == ClassifierSpec::Kind::NearestMean) {
    const NearestMeanModel model = nearest_mean_fit(xtr, ytr, n_classes);
    out.probs = predict_proba(model, xte);
    out.preds = nearest_mean_predict(model, xte);
  } else {
    TrainConfig cfg = spec.classifier.train;
    cfg.seed = derive_seed(spec.seed, "train", static_cast<std::uint64_t>(fold));
    if (spec.classifier.bagging > 0) {
      const BaggingModel model =
          bagging_train(xtr, ytr, n_classes, spec.classifier.bagging, cfg, spec.classifier.bagging_fraction);
      out.probs = predict_proba(model, xte);
    } else {
      const MlpModel model = train_mlp(xtr, ytr, n_classes, cfg);
      out.probs = predict_proba(model, xte);
    }
    out.preds = argmax_rows(out.probs);
  }

  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

} // namespace detail

// Runs k-fold stratified cross-validation over an already-built feature
// source. Every fitted artifact (feature fit, standardizer, PCA, classifier)
// sees the training split only. Folds are independent; `threads` > 1 runs
// them concurrently without changing any reported number.
inline EvalReport cross_validate_source(const FeatureSource& source, const std::vector<int>& labels,
                                        int n_classes, const PipelineSpec& spec, int k,
                                        int threads = 1) {
  validate(spec, n_classes);
  if (source.rows() != static_cast<int>(labels.size()))
    throw std::invalid_argument("cross_validate: labels length mismatch");

  const FoldPlan plan = stratified_kfold(labels, k, derive_seed(spec.seed, "folds"));

  std::vector<detail::FoldOutcome> outcomes(k);
  if (threads <= 1) {
    for (int f = 0; f < k; ++f)
      outcomes[f] = detail::run_fold(source, labels, n_classes, spec, plan, f);
  } else {
    for (int f = 0; f < k;) {
      const int batch = std::min(threads, k - f);
      std::vector<std::future<detail::FoldOutcome>> futures;
      for (int b = 0; b < batch; ++b)
        futures.push_back(std::async(std::launch::async, [&, fold = f + b] {
          return detail::run_fold(source, labels, n_classes, spec, plan, fold);
        }));
      for (int b = 0; b < batch; ++b) outcomes[f + b] = futures[b].get();
      f += batch;
    }
  }

  EvalReport report;
  report.k = k;
  report.seed = spec.seed;
  report.spec = spec;
  report.chance = chance_level(n_classes);
  report.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);
  report.feature_dim = outcomes[0].feature_dim;

  std::vector<double> pooled_scores;
  std::vector<int> pooled_labels;
  Matrix pooled_probs(labels.size(), n_classes);
  Eigen::Index pooled_row = 0;

  for (const auto& fold : outcomes) {
    std::vector<int> truth;
    truth.reserve(fold.test_idx.size());
    for (int i : fold.test_idx) truth.push_back(labels[i]);
    report.fold_accuracy.push_back(accuracy(fold.preds, truth));
    report.confusion += confusion_matrix(fold.preds, truth, n_classes);
    report.fold_seconds.push_back(fold.seconds);
    for (std::size_t r = 0; r < fold.test_idx.size(); ++r) {
      pooled_probs.row(pooled_row++) = fold.probs.row(static_cast<Eigen::Index>(r));
      pooled_labels.push_back(truth[r]);
      if (n_classes == 2) pooled_scores.push_back(fold.probs(static_cast<Eigen::Index>(r), 1));
    }
  }

  double sum = 0.0;
  for (double a : report.fold_accuracy) sum += a;
  report.mean_accuracy = sum / k;
  double var = 0.0;
  for (double a : report.fold_accuracy) var += (a - report.mean_accuracy) * (a - report.mean_accuracy);
  report.std_accuracy = std::sqrt(var / k);

  if (n_classes == 2) {
    const RocResult roc = roc_auc(pooled_scores, pooled_labels);
    report.roc_points = roc.points;
    report.auc = roc.auc;
  }
  report.auc_macro = macro_ovr_auc(pooled_probs, pooled_labels);
  return report;
}

inline TrialSet apply_preprocessing(const TrialSet& ts, const PipelineSpec& spec) {
  TrialSet cur = ts;
  if (spec.filter) cur = filter_trials(cur, *spec.filter);
  if (spec.resample_hz) cur = resample_trials(cur, *spec.resample_hz);
  if (spec.trim) cur = trim_trials(cur, *spec.trim);
  return cur;
}

inline EvalReport cross_validate(const TrialSet& ts, const PipelineSpec& spec, int k, int threads = 1) {
  validate(ts);
  validate(spec, ts.n_classes());
  const TrialSet prepared = apply_preprocessing(ts, spec);
  const TrialFeatureSource source(prepared, spec.features, spec.params);
  return cross_validate_source(source, prepared.labels, prepared.n_classes(), spec, k, threads);
}

} // namespace isd
