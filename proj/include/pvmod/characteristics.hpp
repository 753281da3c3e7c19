#ifndef PVMOD_CHARACTERISTICS_HPP
#define PVMOD_CHARACTERISTICS_HPP

#include "pvmod/circuit_models.hpp"
#include "pvmod/rbf_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pvmod {

struct CurvePoint {
    double v;  // volt
    double i;  // ampere
    double p;  // watt, equal to v*i by construction
};

// One voltage sweep at fixed irradiance and temperature.
struct Curve {
    double irradiance = 1000.0;
    double temperature_k = 298.15;
    std::vector<CurvePoint> points;
    std::string source_tag;
};

struct CurveMetrics {
    double isc = 0.0;
    std::optional<double> voc;  // absent when the sweep never crosses i = 0
    double vmp = 0.0;
    double imp = 0.0;
    double pmp = 0.0;
    std::optional<double> fill_factor;
    std::optional<double> efficiency;
};

struct CurveComparison {
    double rel_mse_i = 0.0;
    double rel_mse_p = 0.0;
    double max_abs_dev_i = 0.0;
    double max_abs_dev_p = 0.0;
};

// Anything that yields a terminal current at (v, g, t).
class CurrentSource {
public:
    virtual ~CurrentSource() = default;
    virtual double current(double v, double g, double t_k) const = 0;
    virtual std::string tag() const = 0;
};

// Equivalent-circuit source. The photocurrent scales with irradiance
// relative to g_ref; temperature replaces the base model's thermal
// context, and an attached seven-parameter extension additionally
// adjusts the series resistance and saturation current.
class CircuitSource : public CurrentSource {
public:
    CircuitSource(FiveParamModel base, double g_ref,
                  std::optional<SevenParamExtension> extension = std::nullopt,
                  SolveOptions opts = {});

    double current(double v, double g, double t_k) const override;
    std::string tag() const override;

    // The five-parameter model adjusted to the given conditions.
    FiveParamModel model_at(double g, double t_k) const;
    double reference_irradiance() const { return g_ref_; }
    const SolveOptions& options() const { return opts_; }

private:
    FiveParamModel base_;
    double g_ref_;
    std::optional<SevenParamExtension> extension_;
    SolveOptions opts_;
};

// Current-kind RBF network as a sweep source.
class SurrogateSource : public CurrentSource {
public:
    explicit SurrogateSource(RbfSurrogate net, std::string tag = "rbf_surrogate");

    double current(double v, double g, double t_k) const override;
    std::string tag() const override;

private:
    RbfSurrogate net_;
    std::string tag_;
};

// n equally spaced points from 0 to v_max inclusive; p = v*i at each point.
Curve sweep_curve(const CurrentSource& source, double g, double t_k,
                  double v_max, int n);

// Figures of merit extracted from a curve. When a source is supplied the
// open-circuit crossing is polished by bisection against it and the
// maximum power point is refined by golden-section search; otherwise both
// come from the stored grid (interpolation and a parabolic vertex).
CurveMetrics curve_metrics(const Curve& curve,
                           std::optional<double> module_area_m2 = std::nullopt,
                           const CurrentSource* source = nullptr);

// Pointwise statistics of `test` against `reference`; both curves must
// share the same voltage grid.
CurveComparison compare_curves(const Curve& test, const Curve& reference);

} // namespace pvmod

#endif
