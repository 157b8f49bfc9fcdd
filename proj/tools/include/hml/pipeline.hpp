#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hml/estimator.hpp"
#include "hml/io.hpp"
#include "hml/material.hpp"
#include "hml/synthesis.hpp"
#include "hml/transport.hpp"
#include "hml/verifier.hpp"

namespace hml::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kCheckFailed = 2, kIoError = 3 };

struct LocalisationCheck {
  LocalisationSymbol symbol = LocalisationSymbol::P;
  /// Model used to build the symbol; defaults to the experiment model.
  std::optional<MaterialModel> symbol_model;
  double max_residual = 0.1;
  /// Compare the mass-weighted residual (default) or the max residual.
  bool weighted = true;
};

struct SupportCheckConfig {
  SupportCase which = SupportCase::Constant;
  double widths = 2.0;
  double min_fraction = 0.99;
};

struct DecompositionCheck {
  bool modal = false;
  double max_residual = 0.05;
  std::optional<Mode> dominant_mode;
  double min_fraction = 0.9;
};

struct KernelCheckConfig {
  int samples = 100;
  double tolerance = 1e-12;
};

struct PredictCheck {
  double t0 = 0.25;
  double t1 = 0.5;
  double half_width = 0.25;
  /// |measured ratio / predicted ratio - 1| bound at the finest level.
  double ratio_tolerance = 0.1;
  std::optional<double> expected_ratio;
};

struct RayCheck {
  std::vector<RayState> starts;
  double t_end = 1.0;
  RayOptions options;
  double max_drift_per_time = 1e-8;
};

struct InvariantCheck {
  double hermitian_tol = 1e-12;
  double psd_tol = 1e-10;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::string hash;
  std::uint64_t seed = 0;
  std::optional<MaterialModel> model;
  GridSpec grid;

  std::string generator;
  std::vector<double> epsilons;
  PlaneWaveSpec plane;
  ExactSolutionSpec exact;
  std::optional<WkbSpec> wkb;
  bool charge = true;

  Window window = Window::constant();
  SphereGrid sphere;
  EstimatorOptions estimator;

  InvariantCheck invariants;
  std::optional<LocalisationCheck> localisation;
  std::optional<SupportCheckConfig> support;
  std::optional<DecompositionCheck> decomposition;
  std::optional<KernelCheckConfig> kernel;
  std::optional<PredictCheck> predict;
  std::optional<RayCheck> rays;

  std::filesystem::path output = "hml_out";
  Precision precision = Precision::F64;
};

/// Throws ConfigError with a JSON-pointer path on any schema violation.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Throws IoError when the file cannot be read, ConfigError when it is not valid JSON.
ExperimentConfig load_config(const std::filesystem::path& path);

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string summary;
};

struct StageOutcome {
  std::vector<CheckResult> checks;
  bool failed() const;
};

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<Precision> format;
  std::optional<int> jobs;
  /// Overrides the support case of the verify stage.
  std::optional<SupportCase> verify_case;
};

/// Output directory after applying overrides.
std::filesystem::path output_dir(const ExperimentConfig& config, const RunOptions& options);

/// Each stage reads its upstream artifacts from the output directory and writes its own.
/// Missing artifacts raise IoError; incompatible options raise ConfigError.
StageOutcome synthesize_stage(const ExperimentConfig& config, const RunOptions& options);
StageOutcome estimate_stage(const ExperimentConfig& config, const RunOptions& options);
StageOutcome verify_stage(const ExperimentConfig& config, const RunOptions& options);
StageOutcome transport_stage(const ExperimentConfig& config, const RunOptions& options);
/// Aggregates the report JSONs of a directory into summary.txt, summary.json and summary.csv.
StageOutcome report_stage(const std::filesystem::path& dir);

/// Runs a command ("run", "synthesize", ...) end to end, writes manifest.json, prints a
/// per-check summary to `log` and returns the exit code.
int execute(const std::string& command, const std::optional<std::filesystem::path>& config_path,
            const RunOptions& options, std::ostream& log, std::ostream& err);

}  // namespace hml::cli
