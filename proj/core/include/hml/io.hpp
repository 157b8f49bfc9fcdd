#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "hml/estimator.hpp"
#include "hml/synthesis.hpp"
#include "hml/transport.hpp"
#include "hml/verifier.hpp"

namespace hml {

enum class Precision { F32, F64 };
std::string to_string(Precision p);
/// "f32" or "f64"; throws Error otherwise.
Precision precision_from_string(const std::string& name);

/// Rounds to 12 significant digits so serialized reports are reproducible byte for byte.
double round_sig(double v, int digits = 12);

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::uint64_t fnv1a(const std::string& bytes);

// ---------------------------------------------------------------- files

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// Pretty-printed with numbers rounded by round_sig.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json(const std::filesystem::path& path);
/// Recursively applies round_sig to every floating point number.
nlohmann::json rounded(const nlohmann::json& value);

// ---------------------------------------------------------------- families

/// Writes dir/family.json and one raw little-endian array per level and part
/// (fields_<i>.bin, sources_<i>.bin, charge_<i>.bin), C order [component][t][x][y][z].
void write_family(const std::filesystem::path& dir, const OscillatingFamily& family, Precision precision);
nlohmann::json read_family_header(const std::filesystem::path& dir);
OscillatingFamily read_family(const std::filesystem::path& dir);
/// Levels are read from disk on demand. Throws IoError when the part is absent.
StreamedFamily read_family_streamed(const std::filesystem::path& dir, FamilyPart part = FamilyPart::Fields);
bool family_has_part(const nlohmann::json& header, FamilyPart part);

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- estimates

/// Sparse: only bins with nonzero entries are listed; matrices are 72 interleaved re/im numbers
/// in row-major order.
nlohmann::json estimate_to_json(const HMeasureEstimate& mu);
HMeasureEstimate estimate_from_json(const nlohmann::json& j);
/// bin, zeta0..zeta3, weight, then the per-bin mass for each level and the limit.
std::string estimate_csv(const HMeasureEstimate& mu);

nlohmann::json matrix_to_json(const CMat6& m);
CMat6 matrix_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- reports

nlohmann::json to_json(const InvariantReport& r);
nlohmann::json to_json(const LocalisationReport& r);
nlohmann::json to_json(const SupportReport& r);
nlohmann::json to_json(const KernelReport& r);
nlohmann::json to_json(const DensityDecomposition& r);
nlohmann::json to_json(const TransportResidualReport& r);
nlohmann::json to_json(const PredictReport& r);

std::string densities_csv(const DensityDecomposition& r);
std::string residual_csv(const TransportResidualReport& r);
std::string trajectory_csv(const std::vector<Trajectory>& rays);

}  // namespace hml
