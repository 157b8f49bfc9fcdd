#include <filesystem>
#include <functional>

#include <gtest/gtest.h>

#include "hml/errors.hpp"
#include "hml/pipeline.hpp"

using namespace hml;
using namespace hml::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base() {
  return json::parse(R"({
    "seed": 3,
    "model": {"kind": "constant", "eps": 2.0, "eta": 1.0, "sigma": 0.0},
    "grid": {"extents": [0.25, 0.125, 0.125, 0.25], "shape": [16, 8, 8, 64],
             "periodic": [false, true, true, true]},
    "family": {"generator": "plane_wave", "k": [0, 0, 1], "mode": "long-e",
               "epsilons": [0.0625, 0.03125]},
    "estimator": {"window": {"type": "fitted"}, "sphere": [4, 4, 8]},
    "checks": {"localisation": {"symbol": "P"}, "kernel": {"samples": 5}},
    "output": {"directory": "out", "format": "f32"}
  })");
}

std::string error_path(const std::function<void(json&)>& mutate) {
  json j = base();
  mutate(j);
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, BaseParses) {
  const ExperimentConfig c = parse_config(base());
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.generator, "plane_wave");
  EXPECT_EQ(c.epsilons, (std::vector<double>{0.0625, 0.03125}));
  EXPECT_EQ(c.plane.mode, Mode::LongE);
  EXPECT_EQ(c.sphere.size(), 4 * 4 * 8);
  EXPECT_EQ(c.precision, Precision::F32);
  EXPECT_EQ(c.output, fs::path("out"));
  ASSERT_TRUE(c.localisation.has_value());
  EXPECT_EQ(c.kernel->samples, 5);
  EXPECT_FALSE(c.predict.has_value());
  EXPECT_EQ(c.hash.size(), 16u);
  EXPECT_EQ(c.hash, parse_config(base()).hash);
}

TEST(Config, HashFollowsContent) {
  json j = base();
  j["seed"] = 4;
  EXPECT_NE(parse_config(j).hash, parse_config(base()).hash);
}

TEST(Config, BundledConfigsParse) {
  for (const char* name : {"constant_planewave", "negative_control", "damping", "variable_wkb"}) {
    SCOPED_TRACE(name);
    EXPECT_NO_THROW(load_config(fs::path(HML_CONFIG_DIR) / (std::string(name) + ".json")));
  }
}

TEST(Config, UnknownFields) {
  EXPECT_EQ(error_path([](json& j) { j["extra"] = 1; }), "/extra");
  EXPECT_EQ(error_path([](json& j) { j["family"]["speed"] = 1; }), "/family/speed");
  EXPECT_EQ(error_path([](json& j) { j["output"]["dir"] = "x"; }), "/output/dir");
}

TEST(Config, RootErrors) {
  EXPECT_EQ(error_path([](json& j) { j["seed"] = -1; }), "/seed");
  EXPECT_EQ(error_path([](json& j) { j["seed"] = "x"; }), "/seed");
  EXPECT_EQ(error_path([](json& j) { j.erase("model"); }), "/model");
  EXPECT_EQ(error_path([](json& j) { j.erase("family"); }), "/family");
}

TEST(Config, ModelErrors) {
  EXPECT_EQ(error_path([](json& j) { j["model"]["kind"] = "tensor"; }), "/model/kind");
  EXPECT_EQ(error_path([](json& j) { j["model"]["sigma"] = -1.0; }), "/model/sigma");
  EXPECT_EQ(error_path([](json& j) { j["model"]["domain"] = json::array(); }), "/model/domain");
}

TEST(Config, GridErrors) {
  EXPECT_EQ(error_path([](json& j) { j["grid"]["shape"][2] = 12; }), "/grid/shape/2");
  EXPECT_EQ(error_path([](json& j) { j["grid"]["shape"][0] = 4; }), "/grid/shape/0");
  EXPECT_EQ(error_path([](json& j) { j["grid"]["extents"][1] = 0.0; }), "/grid/extents/1");
  EXPECT_EQ(error_path([](json& j) { j["grid"]["shape"] = {16, 8, 8}; }), "/grid/shape");
}

TEST(Config, FamilyErrors) {
  EXPECT_EQ(error_path([](json& j) { j["family"]["epsilons"] = {0.0625}; }), "/family/epsilons");
  EXPECT_EQ(error_path([](json& j) { j["family"]["epsilons"] = {0.0625, 0.0625}; }), "/family/epsilons/1");
  EXPECT_EQ(error_path([](json& j) { j["family"]["epsilons"] = {0.0625, 0.01}; }), "/family/epsilons/1");
  EXPECT_EQ(error_path([](json& j) { j["family"]["generator"] = "spline"; }), "/family/generator");
  EXPECT_EQ(error_path([](json& j) { j["family"]["mode"] = "trans+3"; }), "/family/mode");
  EXPECT_EQ(error_path([](json& j) { j["family"]["k"] = {0, 0, 0}; }), "/family/k");
}

TEST(Config, GeneratorNeedsConstantModel) {
  auto variable = [](json& j) {
    j["model"] = {{"kind", "scalar_smooth"}, {"eps", "1 + 0.1*x3"}, {"eta", 1.0}, {"sigma", 0.0}};
  };
  EXPECT_EQ(error_path(variable), "/family/generator");
  EXPECT_EQ(error_path([&](json& j) {
              variable(j);
              j["family"]["generator"] = "exact";
            }),
            "/family/generator");
}

TEST(Config, EstimatorErrors) {
  EXPECT_EQ(error_path([](json& j) { j["estimator"]["sphere"] = {2, 4, 8}; }), "/estimator/sphere/0");
  EXPECT_EQ(error_path([](json& j) { j["estimator"]["window"] = {{"type", "gaussian"}}; }),
            "/estimator/window/type");
  EXPECT_EQ(error_path([](json& j) { j["estimator"]["window"] = {{"type", "constant"}}; }), "/estimator/window");
}

TEST(Config, CheckErrors) {
  EXPECT_EQ(error_path([](json& j) { j["checks"]["support"] = {{"case", "variable"}}; }), "/checks/support/case");
  EXPECT_EQ(error_path([](json& j) { j["checks"]["decomposition"] = {{"kind", "spectral"}}; }),
            "/checks/decomposition/kind");
  EXPECT_EQ(error_path([](json& j) { j["checks"]["predict"] = {{"t0", 0.2}, {"t1", 0.1}}; }), "/checks/predict/t1");
  EXPECT_EQ(error_path([](json& j) { j["checks"]["kernel"]["samples"] = 0; }), "/checks/kernel/samples");
  EXPECT_EQ(error_path([](json& j) { j["checks"]["localisation"]["symbol"] = "Q"; }),
            "/checks/localisation/symbol");
  EXPECT_EQ(error_path([](json& j) {
              j["checks"]["rays"] = {{"starts", {{{"x", {0, 0, 0}}, {"zeta", {-1, 0, 0, 1}}, {"branch", 2}}}}};
            }),
            "/checks/rays/starts/0/branch");
}

TEST(Config, OutputErrors) {
  EXPECT_EQ(error_path([](json& j) { j["output"]["format"] = "f16"; }), "/output/format");
}

TEST(Config, LoadErrors) {
  const fs::path dir = fs::temp_directory_path() / "hml_config_test";
  fs::create_directories(dir);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
  write_text(dir / "broken.json", "{\"seed\": ");
  try {
    load_config(dir / "broken.json");
    FAIL() << "accepted broken JSON";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "");
  }
  fs::remove_all(dir);
}
