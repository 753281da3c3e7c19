#ifndef PVMOD_DATASET_IO_HPP
#define PVMOD_DATASET_IO_HPP

#include "pvmod/characteristics.hpp"
#include "pvmod/circuit_models.hpp"
#include "pvmod/rbf_model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pvmod {

struct Sample {
    double irradiance;                  // W/m^2
    double voltage;                     // V
    std::optional<double> temperature;  // K, absent for 2-input data
    double target;                      // A or W, per dataset kind
};

struct Dataset {
    OutputKind kind = OutputKind::current;
    std::vector<Sample> samples;
    std::string provenance;
};

// n samples with (G, V) drawn uniformly and independently from the given
// ranges. The draw uses mt19937_64 with a 53-bit mantissa mapping, so the
// same seed reproduces the same dataset on any platform. The photocurrent
// is scaled to each sample's irradiance with g_ref = the upper bound of
// g_range; targets come from the exact circuit solver.
Dataset generate_random(const FiveParamModel& model, std::size_t n,
                        std::pair<double, double> g_range,
                        std::pair<double, double> v_range, OutputKind kind,
                        std::uint64_t seed, const SolveOptions& opts = {});

// Cartesian product of the listed irradiances with n_v equally spaced
// voltages; g_ref for the photocurrent scaling is the largest listed
// irradiance.
Dataset generate_grid(const FiveParamModel& model,
                      const std::vector<double>& g_values,
                      std::pair<double, double> v_range, std::size_t n_v,
                      OutputKind kind, const SolveOptions& opts = {});

// CSV round trips are value-exact: numbers are written with enough digits
// to reparse to the identical double.
void write_csv(const Dataset& data, const std::filesystem::path& destination);
Dataset read_dataset_csv(const std::filesystem::path& source, OutputKind kind);

void write_csv(const Curve& curve, const std::filesystem::path& destination);
Curve read_curve_csv(const std::filesystem::path& source);

} // namespace pvmod

#endif
