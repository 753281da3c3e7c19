#include "pvmod/model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace pvmod {

namespace {

using nlohmann::json;

double required_number(const json& j, const std::string& field) {
    if (!j.contains(field))
        throw ParseError("model document: missing field '" + field + "'");
    if (!j.at(field).is_number())
        throw ParseError("model document: field '" + field + "' must be a number");
    return j.at(field).get<double>();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw ValidationError("write failed for '" + path.string() + "'");
}

CircuitModelDocument circuit_from_json(const json& doc) {
    ThermalContext thermal(static_cast<int>(required_number(doc, "n_series")),
                           required_number(doc, "temperature_k"));
    FiveParamModel model(required_number(doc, "iph_a"),
                         required_number(doc, "i0_a"),
                         required_number(doc, "ideality"),
                         required_number(doc, "rs_ohm"),
                         required_number(doc, "rsh_ohm"), thermal);
    CircuitModelDocument out{model, 1000.0, std::nullopt};
    if (doc.contains("g_ref_wm2"))
        out.g_ref = required_number(doc, "g_ref_wm2");
    if (doc.contains("seven_param")) {
        const json& ext = doc.at("seven_param");
        out.extension = SevenParamExtension(
            required_number(ext, "rs_ref_ohm"),
            required_number(ext, "delta_per_k"),
            required_number(ext, "t_ref_k"),
            required_number(ext, "i0_ref_a"),
            required_number(ext, "g_ref_wm2"),
            required_number(ext, "m_exponent"),
            required_number(ext, "eg_over_k_ref_k"),
            required_number(ext, "eg_over_k_k"));
    }
    return out;
}

} // namespace

std::string serialize(const CircuitModelDocument& doc) {
    json j;
    j["version"] = 1;
    j["type"] = "five_param";
    j["iph_a"] = doc.model.iph;
    j["i0_a"] = doc.model.i0;
    j["ideality"] = doc.model.ideality;
    j["rs_ohm"] = doc.model.rs;
    j["rsh_ohm"] = doc.model.rsh;
    j["n_series"] = doc.model.thermal.n_series;
    j["temperature_k"] = doc.model.thermal.temperature_k;
    j["g_ref_wm2"] = doc.g_ref;
    if (doc.extension) {
        const SevenParamExtension& e = *doc.extension;
        j["seven_param"] = json{{"rs_ref_ohm", e.rs_ref},
                                {"delta_per_k", e.delta_per_k},
                                {"t_ref_k", e.t_ref_k},
                                {"i0_ref_a", e.i0_ref},
                                {"g_ref_wm2", e.g_ref},
                                {"m_exponent", e.m_exponent},
                                {"eg_over_k_ref_k", e.eg_over_k_ref},
                                {"eg_over_k_k", e.eg_over_k}};
    }
    return j.dump(2) + "\n";
}

ModelDocument load_model_document(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path.string() + "': invalid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("type"))
        throw ParseError("'" + path.string() + "': missing field 'type'");
    const std::string type = doc.at("type").get<std::string>();
    if (type == "five_param")
        return circuit_from_json(doc);
    if (type == "rbf_surrogate")
        return deserialize(text);
    throw ParseError("'" + path.string() + "': unknown model type '" + type + "'");
}

void save_model_document(const CircuitModelDocument& doc,
                         const std::filesystem::path& path) {
    write_file(path, serialize(doc));
}

void save_model_document(const RbfSurrogate& net,
                         const std::filesystem::path& path) {
    write_file(path, serialize(net));
}

} // namespace pvmod
