#include <cmath>
#include <set>

#include "hml/errors.hpp"
#include "hml/pipeline.hpp"

namespace hml::cli {

using nlohmann::json;

namespace {

// A JSON value together with its location in the document.
struct Node {
  const json& j;
  std::string path;

  bool has(const std::string& key) const { return j.contains(key) && !j.at(key).is_null(); }
  Node at(const std::string& key) const {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    if (!j.contains(key)) throw ConfigError(path + "/" + key, "required field missing");
    return {j.at(key), path + "/" + key};
  }
  Node operator[](std::size_t i) const { return {j.at(i), path + "/" + std::to_string(i)}; }
  std::size_t size() const { return j.size(); }

  void allow(std::initializer_list<const char*> keys) const {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError(path + "/" + it.key(), "unknown field");
  }

  double number() const {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) throw ConfigError(path, "expected a positive number");
    return v;
  }
  int integer() const {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<int>();
  }
  bool boolean() const {
    if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
    return j.get<bool>();
  }
  std::string string() const {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
  }
  void array(std::size_t n) const {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    if (n && j.size() != n) throw ConfigError(path, "expected " + std::to_string(n) + " entries");
  }
  template <std::size_t N>
  std::array<double, N> numbers() const {
    array(N);
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = (*this)[i].number();
    return out;
  }

  double number_or(const std::string& key, double fallback) const { return has(key) ? at(key).number() : fallback; }
  double positive_or(const std::string& key, double fallback) const {
    return has(key) ? at(key).positive() : fallback;
  }
  bool boolean_or(const std::string& key, bool fallback) const { return has(key) ? at(key).boolean() : fallback; }
  std::string string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? at(key).string() : fallback;
  }
};

Vec3 vec3(const Node& n) {
  const auto a = n.numbers<3>();
  return Vec3(a[0], a[1], a[2]);
}
Vec4 vec4(const Node& n) {
  const auto a = n.numbers<4>();
  return Vec4(a[0], a[1], a[2], a[3]);
}

ScalarField coefficient(const Node& n) {
  if (n.j.is_number()) return ScalarField::constant(n.number());
  if (n.j.is_string()) {
    try {
      return ScalarField::expression(n.string());
    } catch (const ParseError& e) {
      throw ConfigError(n.path, e.what());
    }
  }
  throw ConfigError(n.path, "expected a number or an expression string");
}

MaterialModel parse_model(const Node& n) {
  n.allow({"kind", "eps", "eta", "sigma", "domain"});
  const std::string kind = n.string_or("kind", "constant");
  if (kind == "constant") {
    const double eps = n.at("eps").positive(), eta = n.at("eta").positive();
    const double sigma = n.number_or("sigma", 0.0);
    if (sigma < 0.0) throw ConfigError(n.path + "/sigma", "conductivity must be non-negative");
    if (n.has("domain")) throw ConfigError(n.path + "/domain", "a constant model has no domain");
    return MaterialModel::constant(eps, eta, sigma);
  }
  if (kind == "scalar_smooth") {
    std::optional<Box3> domain;
    if (n.has("domain")) {
      const Node d = n.at("domain");
      d.allow({"lo", "hi"});
      domain = Box3{vec3(d.at("lo")), vec3(d.at("hi"))};
    }
    const ScalarField sigma = n.has("sigma") ? coefficient(n.at("sigma")) : ScalarField::constant(0.0);
    return MaterialModel::scalar(coefficient(n.at("eps")), coefficient(n.at("eta")), sigma, domain);
  }
  throw ConfigError(n.path + "/kind", "expected 'constant' or 'scalar_smooth'");
}

GridSpec parse_grid(const Node& n) {
  n.allow({"origin", "extents", "shape", "periodic"});
  GridSpec g;
  if (n.has("origin")) g.origin = n.at("origin").numbers<4>();
  if (n.has("extents")) g.extents = n.at("extents").numbers<4>();
  if (n.has("shape")) {
    const Node s = n.at("shape");
    s.array(4);
    for (int d = 0; d < 4; ++d) g.shape[d] = s[d].integer();
  }
  if (n.has("periodic")) {
    const Node p = n.at("periodic");
    p.array(4);
    for (int d = 0; d < 4; ++d) g.periodic[d] = p[d].boolean();
  }
  for (int d = 0; d < 4; ++d) {
    const int s = g.shape[d];
    if (s < 8 || (s & (s - 1)) != 0)
      throw ConfigError(n.path + "/shape/" + std::to_string(d), "must be a power of two >= 8");
    if (!(g.extents[d] > 0.0)) throw ConfigError(n.path + "/extents/" + std::to_string(d), "must be positive");
  }
  return g;
}

Window parse_window(const Node& n, const GridSpec& grid) {
  n.allow({"type", "taper", "axes"});
  const std::string type = n.string_or("type", "fitted");
  if (type == "constant") return Window::constant();
  if (type == "fitted") {
    std::array<bool, 4> taper{};
    if (n.has("taper")) {
      const Node t = n.at("taper");
      t.array(4);
      for (int d = 0; d < 4; ++d) taper[d] = t[d].boolean();
    } else {
      for (int d = 0; d < 4; ++d) taper[d] = !grid.periodic[d];
    }
    return Window::fitted(grid, taper);
  }
  if (type == "raised_cosine") {
    const Node a = n.at("axes");
    a.array(4);
    std::array<Window::Axis, 4> axes{};
    for (int d = 0; d < 4; ++d) {
      const Node ax = a[d];
      if (ax.j.is_null()) continue;
      ax.allow({"center", "half_width"});
      axes[d] = {false, ax.at("center").number(), ax.at("half_width").positive()};
    }
    return Window::raised_cosine(axes);
  }
  throw ConfigError(n.path + "/type", "expected 'constant', 'fitted' or 'raised_cosine'");
}

Mode parse_mode(const Node& n) {
  try {
    return mode_from_string(n.string());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error&) {
    throw ConfigError(n.path, "unknown mode (expected long-e, long-h, trans+1, trans+2, trans-1, trans-2)");
  }
}

Eigen::Vector3i wave_vector(const Node& n) {
  n.array(3);
  Eigen::Vector3i k;
  for (int i = 0; i < 3; ++i) k[i] = n[i].integer();
  if (k.isZero()) throw ConfigError(n.path, "wave vector must be nonzero");
  return k;
}

Phase parse_phase(const Node& n, const MaterialModel& model) {
  n.allow({"type", "zeta", "branch", "c", "reference", "z_range"});
  const std::string type = n.at("type").string();
  if (type == "linear") return Phase::linear(vec4(n.at("zeta")));
  if (type == "stratified") {
    const int branch = n.at("branch").integer();
    if (branch != 1 && branch != -1) throw ConfigError(n.path + "/branch", "expected +1 or -1");
    const auto range = n.at("z_range").numbers<2>();
    if (!(range[1] > range[0])) throw ConfigError(n.path + "/z_range", "expected lo < hi");
    try {
      return Phase::stratified(model, branch, n.at("c").positive(), vec3(n.at("reference")), range[0], range[1]);
    } catch (const DomainError& e) {
      throw ConfigError(n.path, e.what());
    }
  }
  throw ConfigError(n.path + "/type", "expected 'linear' or 'stratified'");
}

void check_aliasing(const ExperimentConfig& c, const Node& fam) {
  if (c.generator == "wkb") return;  // the estimator checks the realised spectrum
  const Eigen::Vector3i k = c.generator == "plane_wave" ? c.plane.k : c.exact.k;
  const Mode mode = c.generator == "plane_wave" ? c.plane.mode : c.exact.mode;
  const Coefficients co = c.model->at(Vec3(c.grid.origin[1], c.grid.origin[2], c.grid.origin[3]));
  // exact evolution may excite every branch, so its temporal bound uses the full speed
  const double branch = c.generator == "exact" ? 1.0 : std::abs(mode_branch(mode));
  Vec4 freq(branch * co.speed() * k.cast<double>().norm(), std::abs(k[0]), std::abs(k[1]),
            std::abs(k[2]));
  for (std::size_t i = 0; i < c.epsilons.size(); ++i)
    for (int d = 0; d < 4; ++d)
      if (freq[d] / c.epsilons[i] * c.grid.spacing(d) > 0.25 + 1e-12)
        throw ConfigError(fam.path + "/epsilons/" + std::to_string(i),
                          "fewer than four samples per wavelength on axis " + std::to_string(d));
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  const Node root{j, ""};
  root.allow({"$schema", "description", "seed", "model", "grid", "family", "estimator", "checks", "output"});
  ExperimentConfig c;
  c.raw = j;
  c.hash = fnv1a_hex(j.dump());
  if (root.has("seed")) {
    const Node s = root.at("seed");
    if (!s.j.is_number_unsigned() && !(s.j.is_number_integer() && s.j.get<long long>() >= 0))
      throw ConfigError(s.path, "expected a non-negative integer");
    c.seed = s.j.get<std::uint64_t>();
  }
  c.model = parse_model(root.at("model"));
  c.grid = parse_grid(root.at("grid"));

  const Node fam = root.at("family");
  fam.allow({"generator", "k", "mode", "envelope", "amplitude", "amplitude_exponent", "with_sources", "epsilons",
             "phase", "charge"});
  c.generator = fam.at("generator").string();
  if (fam.has("epsilons")) {
    const Node e = fam.at("epsilons");
    e.array(0);
    for (std::size_t i = 0; i < e.size(); ++i) c.epsilons.push_back(e[i].positive());
  } else {
    c.epsilons = default_epsilon_ladder();
  }
  if (c.epsilons.size() < 2) throw ConfigError(fam.path + "/epsilons", "at least two levels are required");
  for (std::size_t i = 1; i < c.epsilons.size(); ++i)
    if (!(c.epsilons[i] < c.epsilons[i - 1]))
      throw ConfigError(fam.path + "/epsilons/" + std::to_string(i), "ladder must be strictly decreasing");
  c.charge = fam.boolean_or("charge", true);
  const Mode mode = fam.has("mode") ? parse_mode(fam.at("mode")) : Mode::Plus1;
  const bool sources = fam.boolean_or("with_sources", true);
  if (c.generator == "plane_wave") {
    if (c.model->kind() != ModelKind::Constant)
      throw ConfigError(fam.path + "/generator", "plane waves need a constant model");
    c.plane.k = fam.has("k") ? wave_vector(fam.at("k")) : Eigen::Vector3i(0, 0, 1);
    c.plane.mode = mode;
    c.plane.with_sources = sources;
    c.plane.amplitude_exponent = fam.number_or("amplitude_exponent", 0.0);
    if (fam.has("envelope")) c.plane.envelope = parse_window(fam.at("envelope"), c.grid);
  } else if (c.generator == "exact") {
    if (c.model->kind() != ModelKind::Constant)
      throw ConfigError(fam.path + "/generator", "exact evolution needs a constant model");
    c.exact.k = fam.has("k") ? wave_vector(fam.at("k")) : Eigen::Vector3i(0, 0, 1);
    c.exact.mode = mode;
    if (fam.has("envelope")) c.exact.envelope = parse_window(fam.at("envelope"), c.grid);
  } else if (c.generator == "wkb") {
    WkbSpec w{parse_phase(fam.at("phase"), *c.model), mode, Window::constant(), sources};
    if (fam.has("amplitude")) w.amplitude = parse_window(fam.at("amplitude"), c.grid);
    c.wkb = w;
  } else {
    throw ConfigError(fam.path + "/generator", "expected 'plane_wave', 'exact' or 'wkb'");
  }
  check_aliasing(c, fam);

  if (root.has("estimator")) {
    const Node est = root.at("estimator");
    est.allow({"window", "sphere", "richardson"});
    c.window = est.has("window") ? parse_window(est.at("window"), c.grid)
                                 : parse_window(Node{json::object(), est.path + "/window"}, c.grid);
    if (est.has("sphere")) {
      const Node s = est.at("sphere");
      s.array(3);
      std::array<int, 3> r{};
      for (int i = 0; i < 3; ++i) {
        r[i] = s[i].integer();
        if (r[i] < 3) throw ConfigError(s.path + "/" + std::to_string(i), "need at least three cells");
      }
      c.sphere = SphereGrid(r[0], r[1], r[2]);
    }
    c.estimator.richardson = est.boolean_or("richardson", false);
  } else {
    static const json empty = json::object();
    c.window = parse_window(Node{empty, "/estimator/window"}, c.grid);
  }
  if (!c.window.supported_in(c.grid))
    throw ConfigError("/estimator/window", "window support leaves the grid box (or is unbounded on a non-periodic axis)");

  if (root.has("checks")) {
    const Node ch = root.at("checks");
    ch.allow({"invariants", "localisation", "support", "decomposition", "kernel", "predict", "rays"});
    if (ch.has("invariants")) {
      const Node n = ch.at("invariants");
      n.allow({"hermitian_tol", "psd_tol"});
      c.invariants.hermitian_tol = n.positive_or("hermitian_tol", 1e-12);
      c.invariants.psd_tol = n.positive_or("psd_tol", 1e-10);
    }
    if (ch.has("localisation")) {
      const Node n = ch.at("localisation");
      n.allow({"symbol", "symbol_model", "max_residual", "statistic"});
      LocalisationCheck l;
      const std::string sym = n.string_or("symbol", "P");
      if (sym == "P")
        l.symbol = LocalisationSymbol::P;
      else if (sym == "B")
        l.symbol = LocalisationSymbol::B;
      else
        throw ConfigError(n.path + "/symbol", "expected 'P' or 'B'");
      if (n.has("symbol_model")) l.symbol_model = parse_model(n.at("symbol_model"));
      l.max_residual = n.positive_or("max_residual", 0.1);
      const std::string stat = n.string_or("statistic", "weighted");
      if (stat != "weighted" && stat != "max") throw ConfigError(n.path + "/statistic", "expected 'weighted' or 'max'");
      l.weighted = stat == "weighted";
      c.localisation = l;
    }
    if (ch.has("support")) {
      const Node n = ch.at("support");
      n.allow({"case", "widths", "min_fraction"});
      SupportCheckConfig s;
      const std::string which = n.string_or("case", c.model->kind() == ModelKind::Constant ? "constant" : "variable");
      if (which == "constant")
        s.which = SupportCase::Constant;
      else if (which == "variable")
        s.which = SupportCase::Variable;
      else
        throw ConfigError(n.path + "/case", "expected 'constant' or 'variable'");
      if ((s.which == SupportCase::Variable) != (c.model->kind() != ModelKind::Constant))
        throw ConfigError(n.path + "/case", "support case does not match the model kind");
      s.widths = n.positive_or("widths", 2.0);
      s.min_fraction = n.positive_or("min_fraction", 0.99);
      c.support = s;
    }
    if (ch.has("decomposition")) {
      const Node n = ch.at("decomposition");
      n.allow({"kind", "max_residual", "dominant_mode", "min_fraction"});
      DecompositionCheck d;
      const std::string kind = n.string_or("kind", c.model->kind() == ModelKind::Constant ? "constant" : "modal");
      if (kind != "constant" && kind != "modal") throw ConfigError(n.path + "/kind", "expected 'constant' or 'modal'");
      d.modal = kind == "modal";
      if (!d.modal && c.model->kind() != ModelKind::Constant)
        throw ConfigError(n.path + "/kind", "constant-case densities need a constant model");
      d.max_residual = n.positive_or("max_residual", 0.05);
      if (n.has("dominant_mode")) {
        if (!d.modal) throw ConfigError(n.path + "/dominant_mode", "only meaningful for the modal fit");
        d.dominant_mode = parse_mode(n.at("dominant_mode"));
      }
      d.min_fraction = n.positive_or("min_fraction", 0.9);
      c.decomposition = d;
    }
    if (ch.has("kernel")) {
      const Node n = ch.at("kernel");
      n.allow({"samples", "tolerance"});
      KernelCheckConfig k;
      if (n.has("samples")) k.samples = n.at("samples").integer();
      if (k.samples < 1) throw ConfigError(n.path + "/samples", "must be positive");
      k.tolerance = n.positive_or("tolerance", 1e-12);
      c.kernel = k;
    }
    if (ch.has("predict")) {
      const Node n = ch.at("predict");
      n.allow({"t0", "t1", "half_width", "ratio_tolerance", "expected_ratio"});
      PredictCheck p;
      p.t0 = n.at("t0").number();
      p.t1 = n.at("t1").number();
      if (!(p.t1 > p.t0)) throw ConfigError(n.path + "/t1", "must exceed t0");
      p.half_width = n.positive_or("half_width", 0.25);
      p.ratio_tolerance = n.positive_or("ratio_tolerance", 0.1);
      if (n.has("expected_ratio")) p.expected_ratio = n.at("expected_ratio").positive();
      c.predict = p;
    }
    if (ch.has("rays")) {
      const Node n = ch.at("rays");
      n.allow({"starts", "t_end", "dt", "max_drift_per_time"});
      RayCheck r;
      const Node s = n.at("starts");
      s.array(0);
      for (std::size_t i = 0; i < s.size(); ++i) {
        const Node st = s[i];
        st.allow({"x", "zeta", "branch"});
        RayState ray;
        ray.x = vec3(st.at("x"));
        ray.zeta = vec4(st.at("zeta"));
        ray.branch = st.at("branch").integer();
        if (ray.branch != 1 && ray.branch != -1) throw ConfigError(st.path + "/branch", "expected +1 or -1");
        r.starts.push_back(ray);
      }
      r.t_end = n.at("t_end").number();
      r.options.dt = n.positive_or("dt", 1e-3);
      r.max_drift_per_time = n.positive_or("max_drift_per_time", 1e-8);
      c.rays = r;
    }
  }

  if (root.has("output")) {
    const Node n = root.at("output");
    n.allow({"directory", "format"});
    if (n.has("directory")) c.output = n.at("directory").string();
    if (n.has("format")) {
      try {
        c.precision = precision_from_string(n.at("format").string());
      } catch (const Error&) {
        throw ConfigError(n.path + "/format", "expected 'f32' or 'f64'");
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace hml::cli
