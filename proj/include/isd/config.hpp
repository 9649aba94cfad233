#pragma once

#include "isd/eval.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace isd {

using nlohmann::json;

// Run configuration mirroring the `run`/`export2d` CLI config file. Unknown
// keys anywhere in the document are errors, not warnings.
struct RunConfig {
  std::string data;
  int folds{10};
  std::uint64_t seed{0};
  std::string report;
  std::string export2d;
  int threads{0}; // 0 = machine parallelism
  PipelineSpec pipeline{};
};

namespace detail {

inline void ensure_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
  if (!j.is_object()) throw std::invalid_argument("config: " + ctx + " must be an object");
  for (const auto& [key, value] : j.items())
    if (allowed.find(key) == allowed.end())
      throw std::invalid_argument("config: unknown key '" + key + "' in " + ctx);
}

inline FilterSpec parse_filter(const json& j) {
  ensure_keys(j, {"kind", "cutoff_hz", "low_hz", "high_hz", "order", "zero_phase"}, "pipeline.filter");
  const std::string kind = j.at("kind").get<std::string>();
  FilterSpec spec;
  if (kind == "lowpass") {
    if (j.contains("low_hz") || j.contains("high_hz"))
      throw std::invalid_argument("config: lowpass filter takes cutoff_hz, not low_hz/high_hz");
    spec = FilterSpec::lowpass(j.at("cutoff_hz").get<double>());
  } else if (kind == "bandpass") {
    if (j.contains("cutoff_hz"))
      throw std::invalid_argument("config: bandpass filter takes low_hz/high_hz, not cutoff_hz");
    spec = FilterSpec::bandpass(j.at("low_hz").get<double>(), j.at("high_hz").get<double>());
  } else {
    throw std::invalid_argument("config: filter kind must be 'lowpass' or 'bandpass'");
  }
  if (j.contains("order")) spec.order = j.at("order").get<int>();
  if (j.contains("zero_phase")) spec.zero_phase = j.at("zero_phase").get<bool>();
  if (spec.order < 1) throw std::invalid_argument("config: filter order must be >= 1");
  return spec;
}

inline void parse_features(const json& j, PipelineSpec& spec) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tangent") {
    ensure_keys(j, {"kind", "shrinkage", "whitened", "mean"}, "pipeline.features (tangent)");
    spec.features = FeatureKind::Tangent;
    if (j.contains("shrinkage")) spec.params.shrinkage = j.at("shrinkage").get<double>();
    if (j.contains("whitened")) spec.params.whitened = j.at("whitened").get<bool>();
    if (j.contains("mean")) {
      const std::string mode = j.at("mean").get<std::string>();
      if (mode == "geometric") spec.params.mean_mode = MeanMode::Geometric;
      else if (mode == "arithmetic") spec.params.mean_mode = MeanMode::Arithmetic;
      else throw std::invalid_argument("config: features.mean must be 'geometric' or 'arithmetic'");
    }
  } else if (kind == "csp_variance") {
    ensure_keys(j, {"kind", "shrinkage", "filters", "log"}, "pipeline.features (csp_variance)");
    spec.features = FeatureKind::CspVariance;
    if (j.contains("shrinkage")) spec.params.shrinkage = j.at("shrinkage").get<double>();
    if (j.contains("filters")) spec.params.csp_filters = j.at("filters").get<int>();
    if (j.contains("log")) spec.params.csp_log = j.at("log").get<bool>();
  } else if (kind == "dft") {
    ensure_keys(j, {"kind", "max_hz", "complex_pairs"}, "pipeline.features (dft)");
    spec.features = FeatureKind::Dft;
    if (j.contains("max_hz")) spec.params.max_hz = j.at("max_hz").get<double>();
    if (j.contains("complex_pairs")) spec.params.complex_pairs = j.at("complex_pairs").get<bool>();
  } else if (kind == "spectrogram") {
    ensure_keys(j, {"kind", "window", "overlap"}, "pipeline.features (spectrogram)");
    spec.features = FeatureKind::Spectrogram;
    if (j.contains("window")) spec.params.spectrogram.window = j.at("window").get<int>();
    if (j.contains("overlap")) spec.params.spectrogram.overlap = j.at("overlap").get<int>();
  } else if (kind == "stats") {
    ensure_keys(j, {"kind"}, "pipeline.features (stats)");
    spec.features = FeatureKind::Stats;
  } else {
    throw std::invalid_argument("config: unknown feature kind '" + kind + "'");
  }
}

inline void parse_classifier(const json& j, ClassifierSpec& cls) {
  ensure_keys(j, {"kind", "hidden", "lr", "epochs", "batch", "beta1", "beta2", "eps", "use_bias"},
              "pipeline.classifier");
  const std::string kind = j.contains("kind") ? j.at("kind").get<std::string>() : "mlp";
  if (kind == "nearest_mean") {
    cls.kind = ClassifierSpec::Kind::NearestMean;
    if (j.size() > 1)
      throw std::invalid_argument("config: nearest_mean classifier takes no parameters");
    return;
  }
  if (kind != "mlp") throw std::invalid_argument("config: classifier kind must be 'mlp' or 'nearest_mean'");
  cls.kind = ClassifierSpec::Kind::Mlp;
  if (j.contains("hidden")) {
    if (j.at("hidden").is_array())
      cls.train.hidden = j.at("hidden").get<std::vector<int>>();
    else
      cls.train.hidden = {j.at("hidden").get<int>()};
  }
  if (j.contains("lr")) cls.train.lr = j.at("lr").get<double>();
  if (j.contains("epochs")) cls.train.epochs = j.at("epochs").get<int>();
  if (j.contains("batch")) cls.train.batch = j.at("batch").get<int>();
  if (j.contains("beta1")) cls.train.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) cls.train.beta2 = j.at("beta2").get<double>();
  if (j.contains("eps")) cls.train.eps = j.at("eps").get<double>();
  if (j.contains("use_bias")) cls.train.use_bias = j.at("use_bias").get<bool>();
}

} // namespace detail

inline PipelineSpec parse_pipeline(const json& j) {
  detail::ensure_keys(j, {"filter", "resample_hz", "trim", "features", "standardize", "pca",
                          "classifier", "bagging"},
                      "pipeline");
  PipelineSpec spec;
  if (j.contains("filter")) spec.filter = detail::parse_filter(j.at("filter"));
  if (j.contains("resample_hz")) spec.resample_hz = j.at("resample_hz").get<double>();
  if (j.contains("trim")) spec.trim = j.at("trim").get<int>();
  if (!j.contains("features")) throw std::invalid_argument("config: pipeline.features is required");
  detail::parse_features(j.at("features"), spec);
  if (j.contains("standardize")) spec.standardize = j.at("standardize").get<bool>();
  if (j.contains("pca") && !j.at("pca").is_null()) spec.pca = j.at("pca").get<int>();
  if (j.contains("classifier")) detail::parse_classifier(j.at("classifier"), spec.classifier);
  if (j.contains("bagging")) {
    detail::ensure_keys(j.at("bagging"), {"estimators", "fraction"}, "pipeline.bagging");
    spec.classifier.bagging = j.at("bagging").at("estimators").get<int>();
    if (j.at("bagging").contains("fraction"))
      spec.classifier.bagging_fraction = j.at("bagging").at("fraction").get<double>();
    if (spec.classifier.bagging < 1)
      throw std::invalid_argument("config: bagging.estimators must be >= 1");
  }
  return spec;
}

inline RunConfig parse_run_config(const json& j) {
  detail::ensure_keys(j, {"data", "folds", "seed", "report", "export2d", "threads", "pipeline"},
                      "top level");
  RunConfig cfg;
  if (!j.contains("data")) throw std::invalid_argument("config: 'data' is required");
  cfg.data = j.at("data").get<std::string>();
  if (j.contains("folds")) cfg.folds = j.at("folds").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("report")) cfg.report = j.at("report").get<std::string>();
  if (j.contains("export2d")) cfg.export2d = j.at("export2d").get<std::string>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (!j.contains("pipeline")) throw std::invalid_argument("config: 'pipeline' is required");
  cfg.pipeline = parse_pipeline(j.at("pipeline"));
  cfg.pipeline.seed = cfg.seed;
  if (cfg.folds < 2) throw std::invalid_argument("config: folds must be >= 2");
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  try {
    json j;
    is >> j;
    return parse_run_config(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

// Serializes the pipeline with every default materialized, so reports are
// reproducible from their own echo.
inline json pipeline_to_json(const PipelineSpec& spec) {
  json j;
  if (spec.filter) {
    json f;
    if (spec.filter->kind == FilterSpec::Kind::Lowpass) {
      f["kind"] = "lowpass";
      f["cutoff_hz"] = spec.filter->high_hz;
    } else {
      f["kind"] = "bandpass";
      f["low_hz"] = spec.filter->low_hz;
      f["high_hz"] = spec.filter->high_hz;
    }
    f["order"] = spec.filter->order;
    f["zero_phase"] = spec.filter->zero_phase;
    j["filter"] = f;
  }
  if (spec.resample_hz) j["resample_hz"] = *spec.resample_hz;
  if (spec.trim) j["trim"] = *spec.trim;

  json feats;
  switch (spec.features) {
    case FeatureKind::Tangent:
      feats["kind"] = "tangent";
      feats["shrinkage"] = spec.params.shrinkage;
      feats["whitened"] = spec.params.whitened;
      feats["mean"] = spec.params.mean_mode == MeanMode::Geometric ? "geometric" : "arithmetic";
      break;
    case FeatureKind::CspVariance:
      feats["kind"] = "csp_variance";
      feats["shrinkage"] = spec.params.shrinkage;
      feats["filters"] = spec.params.csp_filters;
      feats["log"] = spec.params.csp_log;
      break;
    case FeatureKind::Dft:
      feats["kind"] = "dft";
      feats["max_hz"] = spec.params.max_hz;
      feats["complex_pairs"] = spec.params.complex_pairs;
      break;
    case FeatureKind::Spectrogram:
      feats["kind"] = "spectrogram";
      feats["window"] = spec.params.spectrogram.window;
      feats["overlap"] = spec.params.spectrogram.overlap;
      break;
    case FeatureKind::Stats:
      feats["kind"] = "stats";
      break;
  }
  j["features"] = feats;
  j["standardize"] = spec.standardize;
  if (spec.pca) j["pca"] = *spec.pca;

  json cls;
  if (spec.classifier.kind == ClassifierSpec::Kind::NearestMean) {
    cls["kind"] = "nearest_mean";
  } else {
    cls["kind"] = "mlp";
    cls["hidden"] = spec.classifier.train.hidden;
    cls["lr"] = spec.classifier.train.lr;
    cls["epochs"] = spec.classifier.train.epochs;
    cls["batch"] = spec.classifier.train.batch;
    cls["beta1"] = spec.classifier.train.beta1;
    cls["beta2"] = spec.classifier.train.beta2;
    cls["eps"] = spec.classifier.train.eps;
    cls["use_bias"] = spec.classifier.train.use_bias;
  }
  j["classifier"] = cls;
  if (spec.classifier.bagging > 0)
    j["bagging"] = {{"estimators", spec.classifier.bagging},
                    {"fraction", spec.classifier.bagging_fraction}};
  return j;
}

inline json report_to_json(const EvalReport& report, const RunConfig& cfg) {
  json j;
  j["k"] = report.k;
  j["seed"] = report.seed;
  j["fold_accuracy"] = report.fold_accuracy;
  j["mean_accuracy"] = report.mean_accuracy;
  j["std_accuracy"] = report.std_accuracy;
  // Table-style summary: mu/sigma as accuracy percent rounded to integers
  j["accuracy_percent"] = {{"mu", static_cast<int>(std::lround(report.mean_accuracy * 100.0))},
                           {"sigma", static_cast<int>(std::lround(report.std_accuracy * 100.0))}};
  j["chance_level"] = report.chance;
  j["feature_dim"] = report.feature_dim;

  std::vector<std::vector<int>> confusion(report.confusion.rows());
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r)
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
      confusion[r].push_back(report.confusion(r, c));
  j["confusion"] = confusion;

  if (!std::isnan(report.auc)) {
    j["auc"] = report.auc;
    std::vector<std::vector<double>> roc;
    for (auto [fpr, tpr] : report.roc_points) roc.push_back({fpr, tpr});
    j["roc"] = roc;
  }
  if (!std::isnan(report.auc_macro)) j["auc_macro"] = report.auc_macro;
  j["fold_seconds"] = report.fold_seconds;

  json config;
  config["data"] = cfg.data;
  config["folds"] = cfg.folds;
  config["seed"] = cfg.seed;
  config["report"] = cfg.report;
  if (!cfg.export2d.empty()) config["export2d"] = cfg.export2d;
  config["threads"] = cfg.threads;
  config["pipeline"] = pipeline_to_json(report.spec);
  j["config"] = config;
  return j;
}

inline void write_report(const EvalReport& report, const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("report: cannot open for writing: " + path);
  os << report_to_json(report, cfg).dump(2) << "\n";
  if (!os) throw std::runtime_error("report: write failed: " + path);
}

} // namespace isd
