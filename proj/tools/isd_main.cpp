// isd: imagined-speech EEG decoding toolkit command line.
//
// Subcommands:
//   synth     generate a synthetic ISD1 dataset
//   info      print a dataset summary
//   run       cross-validate a pipeline from a JSON config and write a report
//   export2d  write a 2-D PCA projection of tangent features for plotting
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include "isd/config.hpp"
#include "isd/eval.hpp"
#include "isd/io.hpp"
#include "isd/synth.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <thread>

namespace {

int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::pair<double, double> parse_band(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--band", "expected lo:hi, got '" + text + "'");
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--band", "expected numeric lo:hi, got '" + text + "'");
  }
}

void print_summary(const isd::TrialSet& ts) {
  std::cout << ts.n_trials() << " trials, " << ts.n_channels() << " channels, " << ts.n_samples()
            << " samples\n";
  std::cout << "sampling rate: " << ts.fs << " Hz\n";
  const std::vector<int> counts = isd::class_counts(ts.labels, ts.n_classes());
  for (int c = 0; c < ts.n_classes(); ++c)
    std::cout << "  class " << c << " (" << ts.class_names[c] << "): " << counts[c] << " trials\n";
}

int cmd_run(const std::string& config_path, int threads_override) {
  isd::RunConfig cfg;
  try {
    cfg = isd::load_run_config(config_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (cfg.report.empty()) {
    std::cerr << "error: config: 'report' output path is required for run\n";
    return 2;
  }
  try {
    const isd::TrialSet ts = isd::load_trialset(cfg.data);
    const int threads = effective_threads(threads_override > 0 ? threads_override : cfg.threads);
    const isd::EvalReport report = isd::cross_validate(ts, cfg.pipeline, cfg.folds, threads);
    isd::write_report(report, cfg, cfg.report);
    std::cout << "accuracy: " << report.mean_accuracy << " +/- " << report.std_accuracy
              << " (chance " << report.chance << ")\n";
    std::cout << "report written to " << cfg.report << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_export2d(const std::string& config_path, const std::string& out_override) {
  isd::RunConfig cfg;
  try {
    cfg = isd::load_run_config(config_path);
    if (!out_override.empty()) cfg.export2d = out_override;
    if (cfg.export2d.empty())
      throw std::invalid_argument("config: 'export2d' output path is required (or pass -o)");
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    const isd::TrialSet ts = isd::load_trialset(cfg.data);
    const isd::TrialSet prepared = isd::apply_preprocessing(ts, cfg.pipeline);

    std::vector<isd::SpdMatrix> covs;
    covs.reserve(prepared.trials.size());
    for (const isd::Matrix& trial : prepared.trials)
      covs.push_back(isd::trial_covariance(trial, cfg.pipeline.params.shrinkage));
    const isd::SpdMatrix mean = isd::mean_covariance(covs, cfg.pipeline.params.mean_mode).mean;
    const isd::FeatureMatrix feats = isd::tangent_features(covs, mean, cfg.pipeline.params.whitened);

    const isd::PcaModel model = isd::pca_fit(feats, 2);
    isd::export_2d(model, feats, prepared.labels, cfg.export2d);
    std::cout << "wrote " << prepared.n_trials() << " points to " << cfg.export2d << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"imagined-speech EEG decoding toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic ISD1 dataset");
  isd::SynthSpec spec;
  std::vector<std::string> band_args;
  std::string synth_out;
  synth->add_option("--classes", spec.n_classes, "number of classes")->check(CLI::PositiveNumber);
  synth->add_option("--trials", spec.trials_per_class, "trials per class")->check(CLI::PositiveNumber);
  synth->add_option("--channels", spec.n_channels, "channel count")->check(CLI::PositiveNumber);
  synth->add_option("--samples", spec.n_samples, "samples per trial")->check(CLI::PositiveNumber);
  synth->add_option("--fs", spec.fs, "sampling rate in Hz")->check(CLI::PositiveNumber);
  synth->add_option("--noise", spec.noise_amp, "white-noise amplitude")->check(CLI::NonNegativeNumber);
  synth->add_option("--oscillators", spec.oscillators, "oscillators per channel")->check(CLI::PositiveNumber);
  synth->add_option("--seed", spec.seed, "RNG seed");
  synth->add_option("--band", band_args, "per-class oscillation band lo:hi in Hz (repeatable)");
  synth->add_option("-o,--output", synth_out, "output ISD1 path")->required();

  // info
  auto* info = app.add_subcommand("info", "print a dataset summary");
  std::string info_path;
  info->add_option("path", info_path, "ISD1 or delimited-text dataset")->required();

  // run
  auto* run = app.add_subcommand("run", "cross-validate a pipeline from a JSON config");
  std::string run_config;
  int threads = 0;
  run->add_option("config", run_config, "JSON config path")->required();
  run->add_option("--threads", threads, "fold-level parallelism (default: machine)")
      ->check(CLI::NonNegativeNumber);

  // export2d
  auto* exp2d = app.add_subcommand("export2d", "write a 2-D PCA projection of tangent features");
  std::string exp_config, exp_out;
  exp2d->add_option("config", exp_config, "JSON config path")->required();
  exp2d->add_option("-o,--output", exp_out, "override the config's export2d path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (synth->parsed()) {
    try {
      for (const std::string& b : band_args) spec.bands.push_back(parse_band(b));
    } catch (const CLI::ParseError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    try {
      isd::validate(spec);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    try {
      const isd::TrialSet ts = isd::synth_trialset(spec);
      isd::save_trialset(ts, synth_out);
      std::cout << "wrote " << synth_out << "\n";
      print_summary(ts);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  if (info->parsed()) {
    try {
      print_summary(isd::load_trialset(info_path));
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  if (run->parsed()) return cmd_run(run_config, threads);
  if (exp2d->parsed()) return cmd_export2d(exp_config, exp_out);
  return 2;
}
