#pragma once

#include "isd/core.hpp"
#include "isd/io.hpp"
#include "isd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isd {

// ---------------------------------------------------------------------------
// Feed-forward classifier: a^l = g^l(M^l a^{l-1} + b^l) with rectifier hidden
// activations and a softmax output, trained with Adam on cross-entropy.
// Biases can be disabled for the strictly linear-combination variant.
// ---------------------------------------------------------------------------

struct MlpModel {
  std::vector<int> sizes;      // input, hidden..., output
  std::vector<Matrix> weights; // weights[l]: sizes[l+1] × sizes[l]
  std::vector<Vector> biases;  // biases[l]: sizes[l+1]
  bool use_bias{true};

  int n_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
};

struct TrainConfig {
  std::vector<int> hidden{100};
  double lr{1e-3};
  int epochs{300};
  int batch{32};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  std::uint64_t seed{0};
  bool use_bias{true};
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.lr <= 0.0) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
  if (cfg.epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (cfg.batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0 && cfg.beta2 > 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("TrainConfig: betas must lie in (0, 1)");
  for (int h : cfg.hidden)
    if (h < 1) throw std::invalid_argument("TrainConfig: hidden layer width must be >= 1");
}

// Weights ~ N(0, 2/fan_in) (rectifier-appropriate), biases zero,
// deterministic per seed.
inline MlpModel mlp_init(const std::vector<int>& sizes, std::uint64_t seed, bool use_bias = true) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp_init: need at least input and output sizes");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("mlp_init: zero-width layer");

  MlpModel model;
  model.sizes = sizes;
  model.use_bias = use_bias;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    auto rng = make_rng(seed, "init", l);
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / sizes[l]));
    Matrix w(sizes[l + 1], sizes[l]);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) = gauss(rng);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(sizes[l + 1]));
  }
  return model;
}

namespace detail {

inline void softmax_rows(Matrix& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    z.row(i) /= z.row(i).sum();
  }
}

} // namespace detail

// Batched forward pass: one probability row per input row.
inline Matrix mlp_forward_batch(const MlpModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.input_dim()) throw std::invalid_argument("mlp_forward: input width mismatch");
  if (!x.allFinite()) throw std::runtime_error("mlp_forward: non-finite input");
  Matrix a = x;
  for (int l = 0; l < model.n_layers(); ++l) {
    Matrix z = a * model.weights[l].transpose();
    if (model.use_bias) z.rowwise() += model.biases[l].transpose();
    if (l + 1 < model.n_layers())
      a = z.cwiseMax(0.0);
    else {
      detail::softmax_rows(z);
      a = std::move(z);
    }
  }
  return a;
}

inline Vector mlp_forward(const MlpModel& model, const Vector& x) {
  return mlp_forward_batch(model, x.transpose()).row(0).transpose();
}

inline double cross_entropy(const Vector& probs, int target) {
  if (target < 0 || target >= probs.size()) throw std::invalid_argument("cross_entropy: target out of range");
  return -std::log(std::max(probs[target], 1e-12));
}

struct Gradients {
  std::vector<Matrix> dw;
  std::vector<Vector> db;
};

// Exact gradients of the mean cross-entropy over the batch with respect to
// all weights and biases.
inline Gradients mlp_backward_batch(const MlpModel& model, const FeatureMatrix& x,
                                    const std::vector<int>& targets) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(targets.size()) != n)
    throw std::invalid_argument("mlp_backward: targets length mismatch");

  const int layers = model.n_layers();
  std::vector<Matrix> activations(layers + 1);
  activations[0] = x;
  for (int l = 0; l < layers; ++l) {
    Matrix z = activations[l] * model.weights[l].transpose();
    if (model.use_bias) z.rowwise() += model.biases[l].transpose();
    if (l + 1 < layers)
      activations[l + 1] = z.cwiseMax(0.0);
    else {
      detail::softmax_rows(z);
      activations[l + 1] = std::move(z);
    }
  }

  Gradients g;
  g.dw.resize(layers);
  g.db.resize(layers);

  // softmax + cross-entropy: dZ = (P - onehot)/n
  Matrix dz = activations[layers];
  for (Eigen::Index i = 0; i < n; ++i) {
    if (targets[i] < 0 || targets[i] >= model.output_dim())
      throw std::invalid_argument("mlp_backward: target out of range");
    dz(i, targets[i]) -= 1.0;
  }
  dz /= static_cast<double>(n);

  for (int l = layers - 1; l >= 0; --l) {
    g.dw[l] = dz.transpose() * activations[l];
    g.db[l] = dz.colwise().sum().transpose();
    if (l > 0) {
      Matrix da = dz * model.weights[l];
      dz = da.cwiseProduct((activations[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

inline Gradients mlp_backward(const MlpModel& model, const Vector& x, int target) {
  return mlp_backward_batch(model, x.transpose(), {target});
}

// One Adam coefficient update; m and v are the running first/second moment
// estimates and t the 1-based step count.
inline double adam_scalar(double theta, double grad, double& m, double& v, long t, double lr,
                          double beta1, double beta2, double eps) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(beta1, t));
  const double v_hat = v / (1.0 - std::pow(beta2, t));
  return theta - lr * m_hat / (std::sqrt(v_hat) + eps);
}

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  long t{0};
};

inline AdamState make_adam_state(const MlpModel& model) {
  AdamState st;
  for (int l = 0; l < model.n_layers(); ++l) {
    st.mw.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    st.vw.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    st.mb.push_back(Vector::Zero(model.biases[l].size()));
    st.vb.push_back(Vector::Zero(model.biases[l].size()));
  }
  return st;
}

inline void adam_step(MlpModel& model, const Gradients& g, AdamState& st, const TrainConfig& cfg) {
  ++st.t;
  for (int l = 0; l < model.n_layers(); ++l) {
    Matrix& w = model.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        w(i, j) = adam_scalar(w(i, j), g.dw[l](i, j), st.mw[l](i, j), st.vw[l](i, j), st.t, cfg.lr,
                              cfg.beta1, cfg.beta2, cfg.eps);
    if (model.use_bias) {
      Vector& b = model.biases[l];
      for (Eigen::Index i = 0; i < b.size(); ++i)
        b[i] = adam_scalar(b[i], g.db[l][i], st.mb[l][i], st.vb[l][i], st.t, cfg.lr, cfg.beta1,
                           cfg.beta2, cfg.eps);
    }
  }
}

// Mini-batch Adam with a per-epoch shuffle; deterministic given the seed.
inline MlpModel train_mlp(const FeatureMatrix& x, const std::vector<int>& y, int n_classes,
                          const TrainConfig& cfg) {
  validate(cfg);
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw std::invalid_argument("train_mlp: rows and labels mismatch");
  if (x.rows() < 1) throw std::invalid_argument("train_mlp: empty training set");
  if (n_classes < 2) throw std::invalid_argument("train_mlp: need at least 2 classes");
  {
    std::vector<bool> seen(n_classes, false);
    int distinct = 0;
    for (int label : y) {
      if (label < 0 || label >= n_classes) throw std::invalid_argument("train_mlp: label out of range");
      if (!seen[label]) { seen[label] = true; ++distinct; }
    }
    if (distinct < 2) throw std::runtime_error("train_mlp: training data contains a single class");
  }

  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(x.cols()));
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(n_classes);

  MlpModel model = mlp_init(sizes, derive_seed(cfg.seed, "init"), cfg.use_bias);
  AdamState st = make_adam_state(model);
  auto shuffle_rng = make_rng(cfg.seed, "shuffle");

  const Eigen::Index n = x.rows();
  std::vector<int> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (Eigen::Index start = 0; start < n; start += cfg.batch) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch, n - start);
      FeatureMatrix xb(len, x.cols());
      std::vector<int> yb(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        xb.row(i) = x.row(order[start + i]);
        yb[i] = y[order[start + i]];
      }
      const Gradients g = mlp_backward_batch(model, xb, yb);
      adam_step(model, g, st, cfg);
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Bootstrap aggregation over MLP base learners: each member is trained on a
// stratified with-replacement resample and predictions are averaged.
// ---------------------------------------------------------------------------

struct BaggingModel {
  std::vector<MlpModel> members;
  std::vector<std::uint64_t> member_seeds;
};

inline BaggingModel bagging_train(const FeatureMatrix& x, const std::vector<int>& y, int n_classes,
                                  int n_estimators, const TrainConfig& cfg, double fraction = 1.0) {
  if (n_estimators < 1) throw std::invalid_argument("bagging_train: n_estimators must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("bagging_train: fraction must lie in (0, 1]");

  std::vector<std::vector<int>> by_class(n_classes);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= n_classes) throw std::invalid_argument("bagging_train: label out of range");
    by_class[y[i]].push_back(static_cast<int>(i));
  }

  BaggingModel bag;
  for (int e = 0; e < n_estimators; ++e) {
    auto rng = make_rng(cfg.seed, "bootstrap", static_cast<std::uint64_t>(e));
    std::vector<int> picked;
    for (int c = 0; c < n_classes; ++c) {
      const auto& idx = by_class[c];
      if (idx.empty()) continue;
      const int draws = static_cast<int>(std::ceil(fraction * idx.size()));
      std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
      for (int d = 0; d < draws; ++d) picked.push_back(idx[pick(rng)]);
    }

    FeatureMatrix xb(picked.size(), x.cols());
    std::vector<int> yb(picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i) {
      xb.row(static_cast<Eigen::Index>(i)) = x.row(picked[i]);
      yb[i] = y[picked[i]];
    }

    TrainConfig member_cfg = cfg;
    member_cfg.seed = derive_seed(cfg.seed, "estimator", static_cast<std::uint64_t>(e));
    bag.members.push_back(train_mlp(xb, yb, n_classes, member_cfg));
    bag.member_seeds.push_back(member_cfg.seed);
  }
  return bag;
}

inline Matrix predict_proba(const MlpModel& model, const FeatureMatrix& x) {
  return mlp_forward_batch(model, x);
}

// Arithmetic mean of member probability vectors.
inline Matrix predict_proba(const BaggingModel& bag, const FeatureMatrix& x) {
  if (bag.members.empty()) throw std::invalid_argument("predict_proba: empty ensemble");
  Matrix probs = mlp_forward_batch(bag.members[0], x);
  for (std::size_t e = 1; e < bag.members.size(); ++e) probs += mlp_forward_batch(bag.members[e], x);
  return probs / static_cast<double>(bag.members.size());
}

inline std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    out[i] = static_cast<int>(arg);
  }
  return out;
}

template <typename ModelT>
std::vector<int> predict(const ModelT& model, const FeatureMatrix& x) {
  return argmax_rows(predict_proba(model, x));
}

// ---------------------------------------------------------------------------
// Nearest-class-mean baseline; serves as a brute-force reference classifier.
// ---------------------------------------------------------------------------

struct NearestMeanModel {
  Matrix means; // n_classes × n_features
};

inline NearestMeanModel nearest_mean_fit(const FeatureMatrix& x, const std::vector<int>& y,
                                         int n_classes) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw std::invalid_argument("nearest_mean_fit: rows and labels mismatch");
  NearestMeanModel model;
  model.means = Matrix::Zero(n_classes, x.cols());
  std::vector<int> counts(n_classes, 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = y[i];
    if (c < 0 || c >= n_classes) throw std::invalid_argument("nearest_mean_fit: label out of range");
    model.means.row(c) += x.row(i);
    ++counts[c];
  }
  for (int c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) throw std::invalid_argument("nearest_mean_fit: empty class");
    model.means.row(c) /= counts[c];
  }
  return model;
}

// Softmax over negative squared distances, so the baseline also exposes a
// probability surface for ROC analysis.
inline Matrix predict_proba(const NearestMeanModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.means.cols())
    throw std::invalid_argument("nearest_mean: feature width mismatch");
  Matrix scores(x.rows(), model.means.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index c = 0; c < model.means.rows(); ++c)
      scores(i, c) = -(x.row(i) - model.means.row(c)).squaredNorm();
  detail::softmax_rows(scores);
  return scores;
}

inline std::vector<int> nearest_mean_predict(const NearestMeanModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.means.cols())
    throw std::invalid_argument("nearest_mean: feature width mismatch");
  std::vector<int> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < model.means.rows(); ++c) {
      const double d = (x.row(i) - model.means.row(c)).squaredNorm();
      if (d < best_d) { best_d = d; best = static_cast<int>(c); }
    }
    out[i] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// ISM1 model container: magic "ISM1", u32 version, u32 model count, then per
// model the layer sizes, bias flag and parameters as little-endian f64.
// ---------------------------------------------------------------------------

inline void save_models(const std::vector<MlpModel>& models, const std::string& path) {
  if (models.empty()) throw std::invalid_argument("save_models: nothing to save");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("ISM1: cannot open for writing: " + path);
  os.write("ISM1", 4);
  detail::write_le<std::uint32_t>(os, 1u);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(models.size()));
  for (const MlpModel& m : models) {
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.sizes.size()));
    for (int s : m.sizes) detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s));
    detail::write_le<std::uint8_t>(os, m.use_bias ? 1 : 0);
    for (int l = 0; l < m.n_layers(); ++l) {
      for (Eigen::Index i = 0; i < m.weights[l].rows(); ++i)
        for (Eigen::Index j = 0; j < m.weights[l].cols(); ++j)
          detail::write_le<double>(os, m.weights[l](i, j));
      for (Eigen::Index i = 0; i < m.biases[l].size(); ++i) detail::write_le<double>(os, m.biases[l][i]);
    }
  }
  if (!os) throw std::runtime_error("ISM1: write failed: " + path);
}

inline std::vector<MlpModel> load_models(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ISM1: cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "ISM1", 4) != 0)
    throw std::runtime_error("ISM1: bad magic");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != 1) throw std::runtime_error("ISM1: unsupported version");
  const auto count = detail::read_le<std::uint32_t>(is);
  if (count == 0) throw std::runtime_error("ISM1: empty container");

  std::vector<MlpModel> models(count);
  for (auto& m : models) {
    const auto n_sizes = detail::read_le<std::uint32_t>(is);
    if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("ISM1: bad layer count");
    m.sizes.resize(n_sizes);
    for (auto& s : m.sizes) {
      const auto v = detail::read_le<std::uint32_t>(is);
      if (v == 0) throw std::runtime_error("ISM1: zero-width layer");
      s = static_cast<int>(v);
    }
    m.use_bias = detail::read_le<std::uint8_t>(is) != 0;
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
      Matrix w(m.sizes[l + 1], m.sizes[l]);
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = detail::read_le<double>(is);
      Vector b(m.sizes[l + 1]);
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = detail::read_le<double>(is);
      m.weights.push_back(std::move(w));
      m.biases.push_back(std::move(b));
    }
  }
  return models;
}

} // namespace isd
