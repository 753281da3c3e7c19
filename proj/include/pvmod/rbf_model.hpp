#ifndef PVMOD_RBF_MODEL_HPP
#define PVMOD_RBF_MODEL_HPP

#include "pvmod/errors.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pvmod {

// Kernel exponent layout. sum_of_squares is the standard Gaussian
// exp(-||x - c||^2 / sigma^2) and the default for trained networks;
// product_of_squares multiplies the per-dimension squared differences
// inside the exponent and exists to evaluate the published 16-term
// closed forms exactly as printed.
enum class KernelMode { sum_of_squares, product_of_squares };

enum class OutputKind { current, power };

// One hidden unit: output weight plus centroid coordinates in the
// network's (possibly scaled) input space.
struct RbfNeuron {
    double weight;
    double centroid_v;
    double centroid_g;
    std::optional<double> centroid_t;
};

// Affine map x -> (x - offset) * scale applied to an input coordinate
// before kernel evaluation. scale must be positive.
struct AxisScaling {
    double offset = 0.0;
    double scale = 1.0;
};

struct InputScaling {
    AxisScaling v;
    AxisScaling g;
    AxisScaling t;

    static InputScaling identity() { return {}; }
};

struct InputPoint {
    double voltage;
    double irradiance;
    std::optional<double> temperature;
};

struct RbfSurrogate {
    std::vector<RbfNeuron> neurons;
    double sigma = 1.0;
    KernelMode kernel_mode = KernelMode::sum_of_squares;
    InputScaling scaling;
    OutputKind output_kind = OutputKind::current;
    double output_bias = 0.0;

    // Enforces sigma > 0, positive scale factors, and the centroid
    // sanity bounds (checked in raw units: v in [-5, 100], g in [0, 2000]).
    void validate() const;
};

// Gaussian hidden-unit response in (0, 1]; exactly 1 when the mode's
// zero-exponent condition holds (all coordinates at the centroid for
// sum mode; any single coordinate at its centroid for product mode).
double gaussian_activation(const InputPoint& x, const RbfNeuron& neuron,
                           double sigma, KernelMode mode,
                           const InputScaling& scaling);

// Network output: output_bias plus the weighted sum of activations,
// accumulated with compensated summation so the result is insensitive
// to neuron order even with large cancelling weights.
double evaluate(const RbfSurrogate& net, const InputPoint& x);

// Published 16-neuron presets (current and power networks over (V, G)
// in raw units, product-form kernel). The spread was never published,
// so the caller must supply sigma explicitly.
RbfSurrogate table1_current_network(double sigma);
RbfSurrogate table1_power_network(double sigma);

// JSON model document, round-trip exact on every numeric field.
std::string serialize(const RbfSurrogate& net);
RbfSurrogate deserialize(const std::string& document);

std::string to_string(KernelMode mode);
std::string to_string(OutputKind kind);

} // namespace pvmod

#endif
