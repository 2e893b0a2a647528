#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hasod/augment.hpp"
#include "hasod/designgen.hpp"
#include "hasod/numkit.hpp"
#include "hasod/optimize.hpp"
#include "hasod/screening.hpp"
#include "hasod/surrogate.hpp"

namespace hasod {

using Json = nlohmann::json;

// Sorted keys, no whitespace, doubles as %.17g. Non-finite doubles raise NonFinite.
std::string canonical_dump(const Json& value);

// Writes to a sibling temp file, flushes, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, std::size_t cols);

Json to_json(const Design& design);
Design design_from_json(const Json& j, std::size_t k);
Json to_json(const ScreeningReport& report);
ScreeningReport screening_report_from_json(const Json& j);
Json to_json(const FactorClassification& cls);
FactorClassification classification_from_json(const Json& j);
Json to_json(const Strategy& strategy);
Strategy strategy_from_json(const Json& j);
Json to_json(const CombinedModel& model);
CombinedModel combined_model_from_json(const Json& j);
Json to_json(const KernelParams& params);
KernelParams kernel_params_from_json(const Json& j);
Json to_json(const OptimumEstimate& opt);
OptimumEstimate optimum_from_json(const Json& j);
Json to_json(const DEConfig& config);
DEConfig de_config_from_json(const Json& j);

}  // namespace hasod
