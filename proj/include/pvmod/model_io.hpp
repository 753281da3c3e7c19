#ifndef PVMOD_MODEL_IO_HPP
#define PVMOD_MODEL_IO_HPP

#include "pvmod/circuit_models.hpp"
#include "pvmod/rbf_model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

namespace pvmod {

// Circuit model document: the five parameters, thermal context, the
// irradiance the photocurrent refers to, and an optional seven-parameter
// temperature/irradiance correction block.
struct CircuitModelDocument {
    FiveParamModel model;
    double g_ref = 1000.0;
    std::optional<SevenParamExtension> extension;
};

using ModelDocument = std::variant<CircuitModelDocument, RbfSurrogate>;

// Documents share one JSON schema family selected by the "type" field:
// "five_param" or "rbf_surrogate".
std::string serialize(const CircuitModelDocument& doc);
ModelDocument load_model_document(const std::filesystem::path& path);
void save_model_document(const CircuitModelDocument& doc,
                         const std::filesystem::path& path);
void save_model_document(const RbfSurrogate& net,
                         const std::filesystem::path& path);

} // namespace pvmod

#endif
