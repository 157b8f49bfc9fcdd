#include "hml/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hml/errors.hpp"

namespace hml {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

Precision precision_from_string(const std::string& name) {
  if (name == "f32" || name == "complex64") return Precision::F32;
  if (name == "f64" || name == "complex128") return Precision::F64;
  throw Error("unknown precision '" + name + "' (expected f32 or f64)");
}

double round_sig(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return std::strtod(buf, nullptr);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(bytes);
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json rounded(const json& value) {
  if (value.is_number_float()) return round_sig(value.get<double>());
  if (value.is_array()) {
    json out = json::array();
    for (const auto& v : value) out.push_back(rounded(v));
    return out;
  }
  if (value.is_object()) {
    json out = json::object();
    for (auto it = value.begin(); it != value.end(); ++it) out[it.key()] = rounded(it.value());
    return out;
  }
  return value;
}

void write_json(const fs::path& path, const json& value) { write_text(path, rounded(value).dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------- families

json grid_to_json(const GridSpec& g) {
  return {{"origin", g.origin}, {"extents", g.extents}, {"shape", g.shape}, {"periodic", g.periodic}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.origin = j.at("origin").get<std::array<double, 4>>();
  g.extents = j.at("extents").get<std::array<double, 4>>();
  g.shape = j.at("shape").get<std::array<int, 4>>();
  g.periodic = j.at("periodic").get<std::array<bool, 4>>();
  return g;
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

void write_array(const fs::path& path, const std::vector<cd>& data, Precision p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  if (p == Precision::F64) {
    std::vector<double> buf(2 * data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      buf[2 * i] = to_little(data[i].real());
      buf[2 * i + 1] = to_little(data[i].imag());
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  } else {
    std::vector<float> buf(2 * data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      buf[2 * i] = to_little(static_cast<float>(data[i].real()));
      buf[2 * i + 1] = to_little(static_cast<float>(data[i].imag()));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw IoError(path.string(), "write failed");
}

std::vector<cd> read_array(const fs::path& path, std::size_t count, Precision p) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "missing array file");
  std::vector<cd> data(count);
  if (p == Precision::F64) {
    std::vector<double> buf(2 * count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(double)))
      throw IoError(path.string(), "truncated array file");
    for (std::size_t i = 0; i < count; ++i) data[i] = {to_little(buf[2 * i]), to_little(buf[2 * i + 1])};
  } else {
    std::vector<float> buf(2 * count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
      throw IoError(path.string(), "truncated array file");
    for (std::size_t i = 0; i < count; ++i) data[i] = {to_little(buf[2 * i]), to_little(buf[2 * i + 1])};
  }
  return data;
}

const char* part_prefix(FamilyPart part) {
  switch (part) {
    case FamilyPart::Fields: return "fields";
    case FamilyPart::Sources: return "sources";
    case FamilyPart::Charge: return "charge";
  }
  return "?";
}

fs::path level_path(const fs::path& dir, FamilyPart part, std::size_t i) {
  return dir / (std::string(part_prefix(part)) + "_" + std::to_string(i) + ".bin");
}

}  // namespace

void write_family(const fs::path& dir, const OscillatingFamily& family, Precision precision) {
  family.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
  json header;
  header["format"] = "hml-family";
  header["version"] = 1;
  header["grid"] = grid_to_json(family.grid);
  header["epsilons"] = family.epsilons;
  header["components"] = {"E1", "E2", "E3", "H1", "H2", "H3"};
  header["layout"] = "C order [component][t][x1][x2][x3]";
  header["dtype"] = precision == Precision::F32 ? "complex64" : "complex128";
  header["byte_order"] = "little";
  json peaks = json::array();
  for (const Vec4& p : family.peak_frequency) peaks.push_back({p[0], p[1], p[2], p[3]});
  header["peak_frequency"] = peaks;
  header["parts"] = {{"fields", true}, {"sources", family.has_sources()}, {"charge", family.has_charge()}};
  header["generator"] = family.generator;
  for (std::size_t i = 0; i < family.levels(); ++i) {
    write_array(level_path(dir, FamilyPart::Fields, i), family.fields[i].data, precision);
    if (family.has_sources()) write_array(level_path(dir, FamilyPart::Sources, i), family.sources[i].data, precision);
    if (family.has_charge()) write_array(level_path(dir, FamilyPart::Charge, i), family.charge[i].data, precision);
  }
  write_json(dir / "family.json", header);
}

json read_family_header(const fs::path& dir) {
  const fs::path p = dir / "family.json";
  if (!fs::exists(p)) throw IoError(p.string(), "missing family header");
  json h = read_json(p);
  if (h.value("format", "") != "hml-family") throw IoError(p.string(), "not a family header");
  return h;
}

bool family_has_part(const json& header, FamilyPart part) {
  return header.at("parts").value(part_prefix(part), false);
}

namespace {

struct HeaderInfo {
  GridSpec grid;
  std::vector<double> eps;
  std::vector<Vec4> peaks;
  Precision precision;
};

HeaderInfo parse_header(const json& h) {
  HeaderInfo info;
  try {
    info.grid = grid_from_json(h.at("grid"));
    info.eps = h.at("epsilons").get<std::vector<double>>();
    for (const auto& p : h.at("peak_frequency")) info.peaks.emplace_back(p[0], p[1], p[2], p[3]);
    info.precision = precision_from_string(h.at("dtype").get<std::string>());
  } catch (const json::exception& e) {
    throw IoError("family.json", std::string("malformed header: ") + e.what());
  }
  return info;
}

}  // namespace

OscillatingFamily read_family(const fs::path& dir) {
  const json h = read_family_header(dir);
  const HeaderInfo info = parse_header(h);
  OscillatingFamily fam;
  fam.grid = info.grid;
  fam.epsilons = info.eps;
  fam.peak_frequency = info.peaks;
  fam.generator = h.value("generator", json::object());
  auto load = [&](FamilyPart part, int ncomp, std::vector<SpacetimeField>& into) {
    for (std::size_t i = 0; i < info.eps.size(); ++i) {
      SpacetimeField f(info.grid, ncomp);
      f.data = read_array(level_path(dir, part, i), f.data.size(), info.precision);
      into.push_back(std::move(f));
    }
  };
  load(FamilyPart::Fields, kComponents, fam.fields);
  if (family_has_part(h, FamilyPart::Sources)) load(FamilyPart::Sources, kComponents, fam.sources);
  if (family_has_part(h, FamilyPart::Charge)) load(FamilyPart::Charge, 1, fam.charge);
  fam.validate();
  return fam;
}

StreamedFamily read_family_streamed(const fs::path& dir, FamilyPart part) {
  const json h = read_family_header(dir);
  if (!family_has_part(h, part))
    throw IoError((dir / "family.json").string(), std::string("family has no ") + part_prefix(part));
  const HeaderInfo info = parse_header(h);
  StreamedFamily s;
  s.grid = info.grid;
  s.epsilons = info.eps;
  s.peak_frequency = info.peaks;
  const Precision p = info.precision;
  const GridSpec grid = info.grid;
  s.level = [dir, part, p, grid](std::size_t i) {
    const int ncomp = part == FamilyPart::Charge ? 1 : kComponents;
    SpacetimeField f(grid, ncomp);
    f.data = read_array(level_path(dir, part, i), f.data.size(), p);
    return part == FamilyPart::Charge ? pad_charge(f) : f;
  };
  return s;
}

// ---------------------------------------------------------------- estimates

json matrix_to_json(const CMat6& m) {
  json a = json::array();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      a.push_back(m(i, j).real());
      a.push_back(m(i, j).imag());
    }
  return a;
}

CMat6 matrix_from_json(const json& j) {
  if (!j.is_array() || j.size() != 72) throw Error("matrix must have 72 interleaved numbers");
  CMat6 m;
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 6; ++k) m(i, k) = {j[2 * (6 * i + k)].get<double>(), j[2 * (6 * i + k) + 1].get<double>()};
  return m;
}

namespace {

json vec4_json(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
Vec4 vec4_from(const json& j) { return Vec4(j[0], j[1], j[2], j[3]); }

}  // namespace

json estimate_to_json(const HMeasureEstimate& mu) {
  json j;
  j["format"] = "hml-estimate";
  j["test_pair"] = mu.test_pair;
  j["hermitian"] = mu.hermitian;
  j["grid"] = grid_to_json(mu.grid);
  const auto res = mu.sphere.resolution();
  j["sphere"] = {res[0], res[1], res[2]};
  j["window"] = mu.window_name;
  j["window_centroid"] = vec4_json(mu.window_centroid);
  j["epsilons"] = mu.epsilons();
  j["cauchy_drift"] = mu.cauchy_drift;
  j["richardson"] = mu.richardson;
  j["total_mass"] = mu.total_mass();
  j["metadata"] = mu.metadata;
  json bins = json::array();
  for (int i = 0; i < mu.sphere.size(); ++i) {
    if (mu.bins[i].isZero(0.0)) continue;
    const auto& c = mu.sphere.cell(i);
    bins.push_back({{"bin", i}, {"center", vec4_json(c.center)}, {"weight", c.weight},
                    {"centroid", vec4_json(mu.centroids[i])}, {"mass", mu.bin_mass(i)},
                    {"matrix", matrix_to_json(mu.bins[i])}});
  }
  j["bins"] = bins;
  json levels = json::array();
  for (const auto& l : mu.levels) {
    json lb = json::array();
    for (int i = 0; i < mu.sphere.size(); ++i) {
      if (l.bins[i].isZero(0.0) && l.moment_weight[i] == 0.0) continue;
      lb.push_back({{"bin", i}, {"moment", vec4_json(l.moment[i])}, {"moment_weight", l.moment_weight[i]},
                    {"matrix", matrix_to_json(l.bins[i])}});
    }
    levels.push_back({{"epsilon", l.epsilon}, {"field_energy", l.field_energy}, {"dc", matrix_to_json(l.dc)},
                      {"bins", lb}});
  }
  j["levels"] = levels;
  return j;
}

HMeasureEstimate estimate_from_json(const json& j) {
  if (j.value("format", "") != "hml-estimate") throw Error("not an estimate document");
  HMeasureEstimate mu;
  mu.test_pair = j.at("test_pair").get<std::string>();
  mu.hermitian = j.at("hermitian").get<bool>();
  mu.grid = grid_from_json(j.at("grid"));
  const auto res = j.at("sphere").get<std::array<int, 3>>();
  mu.sphere = SphereGrid(res[0], res[1], res[2]);
  mu.window_name = j.at("window").get<std::string>();
  mu.window_centroid = vec4_from(j.at("window_centroid"));
  mu.cauchy_drift = j.at("cauchy_drift").get<double>();
  mu.richardson = j.at("richardson").get<bool>();
  mu.metadata = j.value("metadata", json::object());
  const int n = mu.sphere.size();
  mu.bins.assign(n, CMat6::Zero());
  mu.centroids.resize(n);
  for (int i = 0; i < n; ++i) mu.centroids[i] = mu.sphere.cell(i).center;
  for (const auto& b : j.at("bins")) {
    const int i = b.at("bin").get<int>();
    if (i < 0 || i >= n) throw Error("bin index out of range");
    mu.bins[i] = matrix_from_json(b.at("matrix"));
    mu.centroids[i] = vec4_from(b.at("centroid"));
  }
  for (const auto& l : j.at("levels")) {
    HMeasureLevel lv;
    lv.epsilon = l.at("epsilon").get<double>();
    lv.field_energy = l.at("field_energy").get<double>();
    lv.dc = matrix_from_json(l.at("dc"));
    lv.bins.assign(n, CMat6::Zero());
    lv.moment.assign(n, Vec4::Zero());
    lv.moment_weight.assign(n, 0.0);
    for (const auto& b : l.at("bins")) {
      const int i = b.at("bin").get<int>();
      if (i < 0 || i >= n) throw Error("bin index out of range");
      lv.bins[i] = matrix_from_json(b.at("matrix"));
      lv.moment[i] = vec4_from(b.at("moment"));
      lv.moment_weight[i] = b.at("moment_weight").get<double>();
    }
    mu.levels.push_back(std::move(lv));
  }
  return mu;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double level_mass(const CMat6& m, bool hermitian) { return hermitian ? m.trace().real() : m.norm(); }

}  // namespace

std::string estimate_csv(const HMeasureEstimate& mu) {
  std::ostringstream os;
  os << "bin,zeta0,zeta1,zeta2,zeta3,weight";
  for (const auto& l : mu.levels) os << ",mass_eps_" << num(l.epsilon);
  os << ",mass_limit\n";
  for (int i = 0; i < mu.sphere.size(); ++i) {
    const auto& c = mu.sphere.cell(i);
    double any = mu.bin_mass(i);
    for (const auto& l : mu.levels) any += std::abs(level_mass(l.bins[i], mu.hermitian));
    if (any == 0.0) continue;
    os << i;
    for (int k = 0; k < 4; ++k) os << ',' << num(c.center[k]);
    os << ',' << num(c.weight);
    for (const auto& l : mu.levels) os << ',' << num(level_mass(l.bins[i], mu.hermitian));
    os << ',' << num(mu.bin_mass(i)) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- reports

json to_json(const InvariantReport& r) {
  return {{"hermitian_defect", r.hermitian_defect}, {"min_eigen_ratio", r.min_eigen_ratio},
          {"hermitian_ok", r.hermitian_ok}, {"psd_ok", r.psd_ok}, {"bins_checked", r.bins_checked}};
}

json to_json(const LocalisationReport& r) {
  json bins = json::array();
  for (const auto& b : r.bins) bins.push_back({{"bin", b.bin}, {"mass", b.mass}, {"residual", b.residual}});
  return {{"max_residual", r.max_residual}, {"weighted_residual", r.weighted_residual}, {"absent", r.absent},
          {"bins", bins}};
}

json to_json(const SupportReport& r) {
  return {{"total_mass", r.total_mass}, {"fraction", r.fraction}, {"vacuous", r.vacuous},
          {"tolerance", r.tolerance}, {"breakdown", r.breakdown}};
}

json to_json(const KernelReport& r) {
  json basis = json::array();
  for (const Mat3& m : r.null_basis) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
    basis.push_back(rows);
  }
  return {{"nullity", r.nullity}, {"singular_values", r.singular_values}, {"nonzero_error", r.nonzero_error},
          {"column_misalignment", r.column_misalignment}, {"row_misalignment", r.row_misalignment},
          {"columns_parallel", r.columns_parallel}, {"null_basis", basis}};
}

json to_json(const DensityDecomposition& r) {
  json bins = json::array();
  for (const auto& b : r.bins)
    bins.push_back({{"bin", b.bin}, {"direction", vec4_json(b.direction)}, {"mass", b.mass}, {"a", b.a},
                    {"b", b.b}, {"c", {b.c.real(), b.c.imag()}}, {"d", {b.d.real(), b.d.imag()}},
                    {"modal", b.modal}, {"residual", b.residual}});
  json totals;
  const auto t = r.modal_totals();
  for (int k = 0; k < 6; ++k) totals[to_string(kAllModes[k])] = t[k];
  return {{"kind", to_string(r.kind)}, {"max_residual", r.max_residual()},
          {"conjugate_defect", r.conjugate_defect()}, {"modal_totals", totals}, {"excluded", r.excluded},
          {"bins", bins}};
}

json to_json(const TransportResidualReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"equation", row.equation}, {"psi", row.psi},
                    {"residual", {row.residual.real(), row.residual.imag()}}, {"dominant", row.dominant},
                    {"relative", row.relative}});
  return {{"variant", r.variant}, {"max_relative", r.max_relative()}, {"strong", r.strong},
          {"notices", r.notices}, {"rows", rows}};
}

json to_json(const PredictReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"epsilon", l.epsilon}, {"mass_t0", l.mass_t0}, {"mass_t1", l.mass_t1},
                      {"predicted_t1", l.predicted_t1}, {"discrepancy", l.discrepancy},
                      {"modal_t0", l.modal_t0}, {"modal_t1", l.modal_t1},
                      {"modal_predicted", l.modal_predicted}});
  json j = {{"t0", r.t0}, {"t1", r.t1}, {"levels", levels}};
  if (!r.levels.empty()) {
    j["measured_ratio"] = r.measured_ratio();
    j["predicted_ratio"] = r.predicted_ratio();
  }
  return j;
}

std::string densities_csv(const DensityDecomposition& r) {
  std::ostringstream os;
  os << "bin,zeta0,zeta1,zeta2,zeta3,mass,a,b,c_re,c_im,d_re,d_im";
  for (Mode m : kAllModes) os << ',' << to_string(m);
  os << ",residual\n";
  for (const auto& b : r.bins) {
    os << b.bin;
    for (int k = 0; k < 4; ++k) os << ',' << num(b.direction[k]);
    os << ',' << num(b.mass) << ',' << num(b.a) << ',' << num(b.b) << ',' << num(b.c.real()) << ','
       << num(b.c.imag()) << ',' << num(b.d.real()) << ',' << num(b.d.imag());
    for (double m : b.modal) os << ',' << num(m);
    os << ',' << num(b.residual) << '\n';
  }
  return os.str();
}

std::string residual_csv(const TransportResidualReport& r) {
  std::ostringstream os;
  os << "variant,equation,psi,residual_re,residual_im,dominant,relative\n";
  for (const auto& row : r.rows)
    os << r.variant << ',' << row.equation << ',' << row.psi << ',' << num(row.residual.real()) << ','
       << num(row.residual.imag()) << ',' << num(row.dominant) << ',' << num(row.relative) << '\n';
  return os.str();
}

std::string trajectory_csv(const std::vector<Trajectory>& rays) {
  std::ostringstream os;
  os << "ray,t,x1,x2,x3,zeta0,zeta1,zeta2,zeta3,branch,status\n";
  for (std::size_t r = 0; r < rays.size(); ++r)
    for (const auto& s : rays[r].states) {
      os << r << ',' << num(s.t);
      for (int k = 0; k < 3; ++k) os << ',' << num(s.x[k]);
      for (int k = 0; k < 4; ++k) os << ',' << num(s.zeta[k]);
      os << ',' << s.branch << ',' << to_string(s.status) << '\n';
    }
  return os.str();
}

}  // namespace hml
