#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Core>

#include "hml/errors.hpp"
#include "hml/pipeline.hpp"
#include "hml/version.hpp"

namespace hml::cli {

namespace fs = std::filesystem;
using nlohmann::json;

bool StageOutcome::failed() const {
  for (const auto& c : checks)
    if (!c.passed) return true;
  return false;
}

fs::path output_dir(const ExperimentConfig& config, const RunOptions& options) {
  return options.out ? *options.out : config.output;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

json stamp(const ExperimentConfig& c) {
  return {{"config_hash", c.hash}, {"epsilons", c.epsilons}, {"seed", c.seed}};
}

json checks_json(const std::vector<CheckResult>& checks) {
  json a = json::array();
  for (const auto& c : checks) a.push_back({{"name", c.name}, {"passed", c.passed}, {"summary", c.summary}});
  return a;
}

void require(const fs::path& p) {
  if (!fs::exists(p)) throw IoError(p.string(), "missing upstream artifact");
}

EstimatorOptions estimator_options(const ExperimentConfig& c, const RunOptions& o) {
  EstimatorOptions e = c.estimator;
  if (o.jobs) e.jobs = *o.jobs;
  return e;
}

OscillatingFamily synthesize(const ExperimentConfig& c) {
  OscillatingFamily fam;
  if (c.generator == "plane_wave")
    fam = plane_wave_family(*c.model, c.grid, c.plane, c.epsilons);
  else if (c.generator == "exact")
    fam = exact_solution_family(*c.model, c.grid, c.exact, c.epsilons);
  else
    fam = wkb_family(*c.model, c.grid, *c.wkb, c.epsilons);
  if (c.charge) attach_charge(fam);
  return fam;
}

}  // namespace

StageOutcome synthesize_stage(const ExperimentConfig& c, const RunOptions& o) {
  const fs::path out = output_dir(c, o);
  const OscillatingFamily fam = synthesize(c);
  const Precision p = o.format ? *o.format : c.precision;
  write_family(out / "family", fam, p);
  json rep = stamp(c);
  rep["stage"] = "synthesize";
  rep["generator"] = fam.generator;
  rep["precision"] = to_string(p);
  json norms = json::array();
  for (const auto& f : fam.fields) norms.push_back(f.l2_norm());
  rep["field_norms"] = norms;
  write_json(out / "synthesis.json", rep);
  return {};
}

StageOutcome estimate_stage(const ExperimentConfig& c, const RunOptions& o) {
  const fs::path out = output_dir(c, o);
  require(out / "family" / "family.json");
  const StreamedFamily fam = read_family_streamed(out / "family");
  if (!(fam.grid == c.grid)) throw ConfigError("/grid", "family on disk was synthesized on a different grid");
  if (fam.epsilons != c.epsilons) throw ConfigError("/family/epsilons", "family on disk has a different ladder");
  HMeasureEstimate mu = estimate_hmeasure(fam, c.window, c.sphere, estimator_options(c, o));
  mu.metadata = stamp(c);
  mu.metadata["model_kind"] = to_string(c.model->kind());
  const InvariantReport inv = check_invariants(mu, c.invariants.hermitian_tol, c.invariants.psd_tol);

  json doc = estimate_to_json(mu);
  doc["invariants"] = to_json(inv);
  write_json(out / "estimate.json", doc);
  write_text(out / "estimate.csv", estimate_csv(mu));

  StageOutcome s;
  s.checks.push_back({"invariants.hermitian", inv.hermitian_ok,
                      "max defect " + fmt(inv.hermitian_defect) + " (tol " + fmt(c.invariants.hermitian_tol) + ")"});
  s.checks.push_back({"invariants.psd", inv.psd_ok,
                      "min eigenvalue/trace " + fmt(inv.min_eigen_ratio) + " (tol -" + fmt(c.invariants.psd_tol) + ")"});
  return s;
}

StageOutcome verify_stage(const ExperimentConfig& c, const RunOptions& o) {
  const fs::path out = output_dir(c, o);
  require(out / "estimate.json");
  const json doc = read_json(out / "estimate.json");
  HMeasureEstimate mu;
  try {
    mu = estimate_from_json(doc);
  } catch (const std::exception& e) {
    throw IoError((out / "estimate.json").string(), std::string("unreadable estimate: ") + e.what());
  }
  const std::string kind = mu.metadata.value("model_kind", to_string(c.model->kind()));
  std::optional<SupportCheckConfig> support = c.support;
  if (o.verify_case) {
    if ((*o.verify_case == SupportCase::Variable) != (kind != to_string(ModelKind::Constant)))
      throw ConfigError("--case", std::string("support case '") +
                                      (*o.verify_case == SupportCase::Variable ? "variable" : "constant") +
                                      "' is incompatible with a " + kind + " model estimate");
    if (!support) support = SupportCheckConfig{};
    support->which = *o.verify_case;
  }

  StageOutcome s;
  json rep = stamp(c);
  rep["stage"] = "verify";
  const InvariantReport inv = check_invariants(mu, c.invariants.hermitian_tol, c.invariants.psd_tol);
  rep["invariants"] = to_json(inv);
  s.checks.push_back({"invariants", inv.hermitian_ok && inv.psd_ok,
                      "hermitian defect " + fmt(inv.hermitian_defect) + ", min eigen ratio " + fmt(inv.min_eigen_ratio)});

  if (c.localisation) {
    const auto& l = *c.localisation;
    const MaterialModel& m = l.symbol_model ? *l.symbol_model : *c.model;
    const LocalisationReport r = localisation_residual(mu, m, l.symbol);
    json j = to_json(r);
    json per_level = json::array();
    for (std::size_t i = 0; i < mu.levels.size(); ++i) {
      const LocalisationReport lr = localisation_residual(mu, i, m, l.symbol);
      per_level.push_back({{"epsilon", mu.levels[i].epsilon}, {"weighted_residual", lr.weighted_residual},
                           {"max_residual", lr.max_residual}});
    }
    j["levels"] = per_level;
    j["statistic"] = l.weighted ? "weighted" : "max";
    j["threshold"] = l.max_residual;
    const double value = l.weighted ? r.weighted_residual : r.max_residual;
    const bool ok = !r.bins.empty() && value <= l.max_residual;
    j["passed"] = ok;
    rep["localisation"] = j;
    s.checks.push_back({"localisation", ok, "residual " + fmt(value) + " (max " + fmt(l.max_residual) + ")"});
  }
  if (support) {
    const SupportReport r = support_check(mu, support->which, *c.model, support->widths);
    json j = to_json(r);
    j["case"] = support->which == SupportCase::Constant ? "constant" : "variable";
    j["threshold"] = support->min_fraction;
    const bool ok = !r.vacuous && r.fraction >= support->min_fraction;
    j["passed"] = ok;
    rep["support"] = j;
    s.checks.push_back({"support", ok, "mass fraction " + fmt(r.fraction) + " (min " + fmt(support->min_fraction) + ")"});
  }
  if (c.decomposition) {
    const auto& d = *c.decomposition;
    const DensityDecomposition r = d.modal ? fit_modal_decomposition(mu, *c.model) : fit_constant_decomposition(mu);
    json j = to_json(r);
    bool ok = !r.bins.empty() && r.max_residual() <= d.max_residual;
    std::string summary = "fit residual " + fmt(r.max_residual()) + " (max " + fmt(d.max_residual) + ")";
    if (d.dominant_mode) {
      const auto t = r.modal_totals();
      double total = 0.0;
      for (double v : t) total += v;
      const double frac = total > 0.0 ? t[static_cast<int>(*d.dominant_mode)] / total : 0.0;
      j["dominant_mode"] = to_string(*d.dominant_mode);
      j["dominant_fraction"] = frac;
      ok = ok && frac >= d.min_fraction;
      summary += ", " + to_string(*d.dominant_mode) + " fraction " + fmt(frac) + " (min " + fmt(d.min_fraction) + ")";
    }
    j["passed"] = ok;
    rep["decomposition"] = j;
    write_text(out / "densities.csv", densities_csv(r));
    s.checks.push_back({"decomposition", ok, summary});
  }
  if (c.kernel) {
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> g;
    int worst_nullity = 3;
    double worst_sv = 0.0, worst_align = 0.0;
    bool ok = true;
    for (int i = 0; i < c.kernel->samples; ++i) {
      const Vec3 z(g(rng), g(rng), g(rng));
      const KernelReport k = kernel_lemma_check(z);
      if (k.nullity != 3) worst_nullity = k.nullity;
      worst_sv = std::max(worst_sv, k.nonzero_error / z.norm());
      worst_align = std::max(worst_align, k.column_misalignment);
      ok = ok && k.nullity == 3 && k.nonzero_error <= c.kernel->tolerance * std::max(1.0, z.norm()) &&
           k.columns_parallel;
    }
    rep["kernel"] = {{"samples", c.kernel->samples}, {"nullity", worst_nullity}, {"max_singular_error", worst_sv},
                     {"max_column_misalignment", worst_align}, {"passed", ok}};
    s.checks.push_back({"kernel", ok, "nullity " + std::to_string(worst_nullity) + ", singular value error " +
                                          fmt(worst_sv) + ", column misalignment " + fmt(worst_align)});
  }
  rep["checks"] = checks_json(s.checks);
  write_json(out / "verify.json", rep);
  return s;
}

StageOutcome transport_stage(const ExperimentConfig& c, const RunOptions& o) {
  const fs::path out = output_dir(c, o);
  StageOutcome s;
  json rep = stamp(c);
  rep["stage"] = "transport";
  if (c.predict) {
    require(out / "family" / "family.json");
    const OscillatingFamily fam = read_family(out / "family");
    PredictOptions po;
    po.half_width = c.predict->half_width;
    po.sphere = c.sphere;
    po.estimator = estimator_options(c, o);
    const PredictReport r = predict_then_compare(fam, *c.model, c.predict->t0, c.predict->t1, po);
    json j = to_json(r);
    const double meas = r.measured_ratio(), pred = r.predicted_ratio();
    bool ok = std::abs(meas / pred - 1.0) <= c.predict->ratio_tolerance;
    std::string summary = "measured ratio " + fmt(meas) + ", predicted " + fmt(pred);
    if (c.predict->expected_ratio) {
      ok = ok && std::abs(meas / *c.predict->expected_ratio - 1.0) <= c.predict->ratio_tolerance;
      summary += ", expected " + fmt(*c.predict->expected_ratio);
    }
    j["ratio_tolerance"] = c.predict->ratio_tolerance;
    j["passed"] = ok;
    rep["predict"] = j;
    s.checks.push_back({"predict", ok, summary + " (tol " + fmt(c.predict->ratio_tolerance) + ")"});
  }
  if (c.rays) {
    const auto& r = *c.rays;
    const auto rays = integrate_rays(*c.model, r.starts, r.t_end, r.options, o.jobs.value_or(1));
    double worst = 0.0;
    json list = json::array();
    bool ok = true;
    for (std::size_t i = 0; i < rays.size(); ++i) {
      const double span = std::abs(r.t_end - r.starts[i].t);
      const double rate = span > 0.0 ? rays[i].hamiltonian_drift / span : 0.0;
      worst = std::max(worst, rate);
      ok = ok && rays[i].status == RayStatus::Completed && rate <= r.max_drift_per_time;
      list.push_back({{"status", to_string(rays[i].status)}, {"drift_per_time", rate}});
    }
    rep["rays"] = {{"rays", list}, {"max_drift_per_time", worst}, {"threshold", r.max_drift_per_time}, {"passed", ok}};
    write_text(out / "trajectories.csv", trajectory_csv(rays));
    s.checks.push_back({"rays", ok, "drift per unit time " + fmt(worst) + " (max " + fmt(r.max_drift_per_time) + ")"});
  }
  rep["checks"] = checks_json(s.checks);
  write_json(out / "transport.json", rep);
  return s;
}

StageOutcome report_stage(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string(), "report directory does not exist");
  json summary = json::object();
  std::ostringstream text, csv;
  csv << "report,check,passed,summary\n";
  StageOutcome s;
  for (const char* name : {"synthesis", "estimate", "verify", "transport"}) {
    const fs::path p = dir / (std::string(name) + ".json");
    if (!fs::exists(p)) continue;
    const json j = read_json(p);
    json entry;
    if (j.contains("metadata")) {
      entry["config_hash"] = j["metadata"].value("config_hash", "");
      entry["epsilons"] = j.value("epsilons", json::array());
      entry["total_mass"] = j.value("total_mass", 0.0);
      entry["cauchy_drift"] = j.value("cauchy_drift", 0.0);
      entry["invariants"] = j.value("invariants", json::object());
      text << name << ": total mass " << fmt(entry["total_mass"].get<double>()) << ", Cauchy drift "
           << fmt(entry["cauchy_drift"].get<double>()) << "\n";
    } else {
      entry["config_hash"] = j.value("config_hash", "");
      entry["epsilons"] = j.value("epsilons", json::array());
      entry["checks"] = j.value("checks", json::array());
      text << name << ": " << entry["checks"].size() << " checks\n";
      for (const auto& ch : entry["checks"]) {
        const bool passed = ch.value("passed", false);
        text << "  " << (passed ? "PASS " : "FAIL ") << ch.value("name", "") << ": " << ch.value("summary", "") << "\n";
        csv << name << ',' << ch.value("name", "") << ',' << (passed ? 1 : 0) << ",\"" << ch.value("summary", "")
            << "\"\n";
        s.checks.push_back({std::string(name) + "." + ch.value("name", ""), passed, ch.value("summary", "")});
      }
    }
    summary[name] = entry;
  }
  write_text(dir / "summary.txt", text.str());
  write_json(dir / "summary.json", summary);
  write_text(dir / "summary.csv", csv.str());
  return s;
}

int execute(const std::string& command, const std::optional<fs::path>& config_path, const RunOptions& options,
            std::ostream& log, std::ostream& err) {
  static const std::vector<std::string> stages{"synthesize", "estimate", "verify", "transport", "report"};
  std::vector<std::string> plan;
  if (command == "run")
    plan = stages;
  else if (std::find(stages.begin(), stages.end(), command) != stages.end())
    plan = {command};
  else {
    err << "error: unknown command '" << command << "'\n";
    return kConfigError;
  }

  std::optional<ExperimentConfig> config;
  json manifest;
  manifest["command"] = command;
  manifest["versions"] = {{"hml", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  std::vector<CheckResult> all;
  fs::path out;
  int code = kOk;
  try {
    if (config_path) {
      config = load_config(*config_path);
      out = output_dir(*config, options);
      manifest["inputs"] = {{"config", config_path->string()}, {"config_hash", config->hash}};
      manifest["seed"] = config->seed;
      manifest["epsilons"] = config->epsilons;
    } else if (command == "report") {
      out = options.out ? *options.out : fs::path("hml_out");
    } else {
      err << "error: --config is required for '" << command << "'\n";
      return kConfigError;
    }
    json timing = json::array();
    for (const auto& stage : plan) {
      const auto start = std::chrono::steady_clock::now();
      StageOutcome r;
      if (stage == "synthesize")
        r = synthesize_stage(*config, options);
      else if (stage == "estimate")
        r = estimate_stage(*config, options);
      else if (stage == "verify")
        r = verify_stage(*config, options);
      else if (stage == "transport")
        r = transport_stage(*config, options);
      else if (command == "report")
        r = report_stage(out);
      else
        report_stage(out);  // inside run the checks were already counted
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      timing.push_back({{"stage", stage}, {"seconds", secs}});
      for (const auto& c : r.checks) {
        log << (c.passed ? "PASS " : "FAIL ") << stage << "." << c.name << ": " << c.summary << "\n";
        all.push_back(c);
      }
    }
    manifest["stages"] = timing;
    for (const auto& c : all)
      if (!c.passed) code = kCheckFailed;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    code = kConfigError;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    code = kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    code = kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = kConfigError;
  }
  manifest["checks"] = checks_json(all);
  manifest["exit_code"] = code;
  if (!out.empty() && fs::is_directory(out)) {
    try {
      write_json(out / "manifest.json", manifest);
    } catch (const IoError& e) {
      err << "io error: " << e.what() << "\n";
      if (code == kOk) code = kIoError;
    }
  }
  if (code == kCheckFailed) log << "one or more checks failed\n";
  return code;
}

}  // namespace hml::cli
