#include "pvmod/rbf_model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>

namespace pvmod {

namespace {

using nlohmann::json;

// Table of the published networks, one row per hidden unit:
// current weight, current centroid (V, G), power weight, power centroid (V, G).
struct PresetRow {
    double w1, c11, c12, w2, c21, c22;
};

constexpr PresetRow k_preset_rows[16] = {
    {5.46, 12.56, 200, -508.62, 13.05, 200},
    {3.40, 7.54, 1000, 234.13, 18.74, 1000},
    {1.60, 22.50, 200, 80.66, 20.58, 200},
    {5.84, 11.25, 600, 11.30, 18.76, 600},
    {0.17, 18.75, 600, -13291.85, 26.25, 600},
    {3.53, 27.52, 1000, 32.03, 11.24, 1000},
    {-1.03, 17.56, 200, -30.05, 9.31, 200},
    {0.71, 18.75, 200, -323980.43, 28.12, 200},
    {2.65, 7.50, 1000, 324721.68, 26.25, 1000},
    {2.01, 2.52, 200, -391.01, 16.81, 200},
    {1.48, 26.25, 600, -4.21, 11.27, 600},
    {1.20, 26.25, 1000, -1241.57, 3.75, 1000},
    {-629.95, 3.75, 200, 1397.96, 24.35, 200},
    {629.51, 3.75, 600, 20.57, 3.76, 600},
    {-7.39, 11.25, 200, 13018.81, 1.86, 200},
    {8.96, 22.55, 200, 30.81, 5.58, 200},
};

double scaled(double x, const AxisScaling& s) { return (x - s.offset) * s.scale; }

void check_scale(const AxisScaling& s, const char* axis) {
    if (!(std::isfinite(s.scale) && s.scale > 0.0) || !std::isfinite(s.offset))
        throw ValidationError(std::string("RbfSurrogate: scale for axis '") +
                              axis + "' must be positive and finite");
}

// Neumaier compensated accumulation; needed because the published
// weights contain near-cancelling pairs up to +-3.2e5.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace

void RbfSurrogate::validate() const {
    if (!(std::isfinite(sigma) && sigma > 0.0))
        throw ValidationError("RbfSurrogate: sigma must be > 0");
    check_scale(scaling.v, "v");
    check_scale(scaling.g, "g");
    check_scale(scaling.t, "t");
    if (!std::isfinite(output_bias))
        throw ValidationError("RbfSurrogate: output_bias must be finite");
    if (!neurons.empty()) {
        const bool has_t = neurons.front().centroid_t.has_value();
        for (const RbfNeuron& n : neurons) {
            if (n.centroid_t.has_value() != has_t)
                throw ValidationError("RbfSurrogate: neurons must agree on the "
                                      "temperature dimension");
        }
    }
    for (std::size_t i = 0; i < neurons.size(); ++i) {
        const RbfNeuron& n = neurons[i];
        if (!std::isfinite(n.weight))
            throw ValidationError("RbfSurrogate: neuron " + std::to_string(i) +
                                  " has a non-finite weight");
        const double raw_v = n.centroid_v / scaling.v.scale + scaling.v.offset;
        const double raw_g = n.centroid_g / scaling.g.scale + scaling.g.offset;
        if (!(raw_v >= -5.0 && raw_v <= 100.0))
            throw ValidationError("RbfSurrogate: neuron " + std::to_string(i) +
                                  " voltage centroid outside [-5, 100] V");
        if (!(raw_g >= 0.0 && raw_g <= 2000.0))
            throw ValidationError("RbfSurrogate: neuron " + std::to_string(i) +
                                  " irradiance centroid outside [0, 2000] W/m^2");
    }
}

double gaussian_activation(const InputPoint& x, const RbfNeuron& neuron,
                           double sigma, KernelMode mode,
                           const InputScaling& scaling) {
    if (!(sigma > 0.0))
        throw ValidationError("gaussian_activation: sigma must be > 0");
    if (!(x.irradiance >= 0.0))
        throw ValidationError("gaussian_activation: irradiance must be >= 0");

    const double dv = scaled(x.voltage, scaling.v) - neuron.centroid_v;
    const double dg = scaled(x.irradiance, scaling.g) - neuron.centroid_g;
    double dt = 0.0;
    if (neuron.centroid_t) {
        if (!x.temperature)
            throw ValidationError("gaussian_activation: 3-input neuron needs a "
                                  "temperature");
        dt = scaled(*x.temperature, scaling.t) - *neuron.centroid_t;
    }
    double exponent;
    if (mode == KernelMode::sum_of_squares) {
        exponent = dv * dv + dg * dg;
        if (neuron.centroid_t)
            exponent += dt * dt;
    } else {
        exponent = dv * dv * dg * dg;
        if (neuron.centroid_t)
            exponent *= dt * dt;
    }
    return std::exp(-exponent / (sigma * sigma));
}

double evaluate(const RbfSurrogate& net, const InputPoint& x) {
    if (net.neurons.empty())
        throw ValidationError("evaluate: surrogate has no neurons");
    CompensatedSum acc;
    acc.add(net.output_bias);
    for (const RbfNeuron& n : net.neurons)
        acc.add(n.weight *
                gaussian_activation(x, n, net.sigma, net.kernel_mode, net.scaling));
    return acc.value();
}

namespace {

RbfSurrogate make_preset(double sigma, OutputKind kind) {
    if (!(sigma > 0.0))
        throw ValidationError("table1 preset: sigma must be supplied and > 0");
    RbfSurrogate net;
    net.sigma = sigma;
    net.kernel_mode = KernelMode::product_of_squares;
    net.scaling = InputScaling::identity();
    net.output_kind = kind;
    net.output_bias = 0.0;
    net.neurons.reserve(16);
    for (const PresetRow& row : k_preset_rows) {
        if (kind == OutputKind::current)
            net.neurons.push_back({row.w1, row.c11, row.c12, std::nullopt});
        else
            net.neurons.push_back({row.w2, row.c21, row.c22, std::nullopt});
    }
    net.validate();
    return net;
}

json scaling_to_json(const AxisScaling& s) {
    return json{{"offset", s.offset}, {"scale", s.scale}};
}

AxisScaling scaling_from_json(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("offset") || !j.contains("scale"))
        throw ParseError("model document: field '" + field +
                         "' must be an object with offset and scale");
    AxisScaling s;
    s.offset = j.at("offset").get<double>();
    s.scale = j.at("scale").get<double>();
    return s;
}

double required_number(const json& j, const std::string& field) {
    if (!j.contains(field))
        throw ParseError("model document: missing field '" + field + "'");
    if (!j.at(field).is_number())
        throw ParseError("model document: field '" + field + "' must be a number");
    return j.at(field).get<double>();
}

} // namespace

RbfSurrogate table1_current_network(double sigma) {
    return make_preset(sigma, OutputKind::current);
}

RbfSurrogate table1_power_network(double sigma) {
    return make_preset(sigma, OutputKind::power);
}

std::string to_string(KernelMode mode) {
    return mode == KernelMode::sum_of_squares ? "sum_of_squares"
                                              : "product_of_squares";
}

std::string to_string(OutputKind kind) {
    return kind == OutputKind::current ? "current" : "power";
}

std::string serialize(const RbfSurrogate& net) {
    net.validate();
    json doc;
    doc["version"] = 1;
    doc["type"] = "rbf_surrogate";
    doc["output_kind"] = to_string(net.output_kind);
    doc["kernel_mode"] = to_string(net.kernel_mode);
    doc["sigma"] = net.sigma;
    doc["output_bias"] = net.output_bias;
    doc["scaling"] = json{{"v", scaling_to_json(net.scaling.v)},
                          {"g", scaling_to_json(net.scaling.g)},
                          {"t", scaling_to_json(net.scaling.t)}};
    json neurons = json::array();
    for (const RbfNeuron& n : net.neurons) {
        json jn{{"w", n.weight}, {"c_v", n.centroid_v}, {"c_g", n.centroid_g}};
        if (n.centroid_t)
            jn["c_t"] = *n.centroid_t;
        neurons.push_back(std::move(jn));
    }
    doc["neurons"] = std::move(neurons);
    return doc.dump(2) + "\n";
}

RbfSurrogate deserialize(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model document: invalid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ParseError("model document: top level must be an object");
    if (doc.contains("type") && doc.at("type") != "rbf_surrogate")
        throw ParseError("model document: field 'type' is not 'rbf_surrogate'");

    RbfSurrogate net;
    net.sigma = required_number(doc, "sigma");
    if (doc.contains("output_bias"))
        net.output_bias = required_number(doc, "output_bias");

    if (!doc.contains("output_kind"))
        throw ParseError("model document: missing field 'output_kind'");
    const std::string kind = doc.at("output_kind").get<std::string>();
    if (kind == "current")
        net.output_kind = OutputKind::current;
    else if (kind == "power")
        net.output_kind = OutputKind::power;
    else
        throw ParseError("model document: field 'output_kind' must be "
                         "'current' or 'power'");

    if (!doc.contains("kernel_mode"))
        throw ParseError("model document: missing field 'kernel_mode'");
    const std::string mode = doc.at("kernel_mode").get<std::string>();
    if (mode == "sum_of_squares")
        net.kernel_mode = KernelMode::sum_of_squares;
    else if (mode == "product_of_squares")
        net.kernel_mode = KernelMode::product_of_squares;
    else
        throw ParseError("model document: field 'kernel_mode' must be "
                         "'sum_of_squares' or 'product_of_squares'");

    if (!doc.contains("scaling"))
        throw ParseError("model document: missing field 'scaling'");
    const json& js = doc.at("scaling");
    net.scaling.v = scaling_from_json(js.value("v", json()), "scaling.v");
    net.scaling.g = scaling_from_json(js.value("g", json()), "scaling.g");
    if (js.contains("t"))
        net.scaling.t = scaling_from_json(js.at("t"), "scaling.t");

    if (!doc.contains("neurons") || !doc.at("neurons").is_array())
        throw ParseError("model document: missing array field 'neurons'");
    for (const json& jn : doc.at("neurons")) {
        RbfNeuron n;
        n.weight = required_number(jn, "w");
        n.centroid_v = required_number(jn, "c_v");
        n.centroid_g = required_number(jn, "c_g");
        if (jn.contains("c_t"))
            n.centroid_t = required_number(jn, "c_t");
        net.neurons.push_back(n);
    }
    net.validate();
    return net;
}

} // namespace pvmod
