#include "pvmod/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace pvmod {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

} // namespace

CircuitSource::CircuitSource(FiveParamModel base, double g_ref,
                             std::optional<SevenParamExtension> extension,
                             SolveOptions opts)
    : base_(base), g_ref_(g_ref), extension_(std::move(extension)), opts_(opts) {
    if (!(g_ref_ > 0.0))
        throw ValidationError("CircuitSource: g_ref must be > 0");
}

FiveParamModel CircuitSource::model_at(double g, double t_k) const {
    const double iph = photocurrent_at_irradiance(base_.iph, g, g_ref_);
    double rs = base_.rs;
    double i0 = base_.i0;
    if (extension_) {
        rs = rs_at_temperature(*extension_, t_k);
        i0 = i0_at_conditions(*extension_, g > 0.0 ? g : extension_->g_ref, t_k);
    }
    return FiveParamModel(iph, i0, base_.ideality, rs, base_.rsh,
                          ThermalContext(base_.thermal.n_series, t_k));
}

double CircuitSource::current(double v, double g, double t_k) const {
    return solve_current(model_at(g, t_k), v, opts_);
}

std::string CircuitSource::tag() const {
    return extension_ ? "seven_param" : "five_param";
}

SurrogateSource::SurrogateSource(RbfSurrogate net, std::string tag)
    : net_(std::move(net)), tag_(std::move(tag)) {
    net_.validate();
    if (net_.output_kind != OutputKind::current)
        throw ValidationError("SurrogateSource: network must predict current");
}

double SurrogateSource::current(double v, double g, double t_k) const {
    InputPoint x{v, g, std::nullopt};
    // Pass the temperature through only for networks that use it.
    for (const RbfNeuron& n : net_.neurons) {
        if (n.centroid_t) {
            x.temperature = t_k;
            break;
        }
    }
    return evaluate(net_, x);
}

std::string SurrogateSource::tag() const { return tag_; }

Curve sweep_curve(const CurrentSource& source, double g, double t_k,
                  double v_max, int n) {
    if (n < 2)
        throw ValidationError("sweep_curve: n must be >= 2");
    if (!(v_max > 0.0))
        throw ValidationError("sweep_curve: v_max must be > 0");

    Curve curve;
    curve.irradiance = g;
    curve.temperature_k = t_k;
    curve.source_tag = source.tag();
    curve.points.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double v = v_max * static_cast<double>(k) / (n - 1);
        double i;
        try {
            i = source.current(v, g, t_k);
        } catch (const SolverError& e) {
            throw SolverError("sweep_curve at v=" + fmt(v) + ": " + e.what(),
                              e.bracket_lo(), e.bracket_hi());
        } catch (const SaturationError& e) {
            throw SaturationError("sweep_curve at v=" + fmt(v) + ": " + e.what(),
                                  e.exponent());
        }
        curve.points.push_back({v, i, v * i});
    }
    return curve;
}

namespace {

// Golden-section maximization of p(v) = v*source(v) on [a, b].
std::pair<double, double> golden_max_power(const CurrentSource& source, double g,
                                           double t_k, double a, double b,
                                           double v_resolution) {
    constexpr double inv_phi = 0.6180339887498949;
    auto power = [&](double v) { return v * source.current(v, g, t_k); };
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = power(x1);
    double f2 = power(x2);
    while (b - a > v_resolution) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = power(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = power(x1);
        }
    }
    const double vmp = 0.5 * (a + b);
    return {vmp, source.current(vmp, g, t_k)};
}

// Vertex of the parabola through three curve points; falls back to the
// middle point for degenerate (collinear) data.
double parabola_vertex(const CurvePoint& l, const CurvePoint& m,
                       const CurvePoint& r) {
    const double d1 = (m.p - l.p) / (m.v - l.v);
    const double d2 = (r.p - m.p) / (r.v - m.v);
    const double curvature = (d2 - d1) / (r.v - l.v);
    if (!(curvature < 0.0))
        return m.v;
    const double v = 0.5 * (l.v + m.v) - d1 / (2.0 * curvature);
    return std::clamp(v, l.v, r.v);
}

double interpolate_current(const Curve& curve, double v) {
    const auto& pts = curve.points;
    auto it = std::lower_bound(pts.begin(), pts.end(), v,
                               [](const CurvePoint& p, double x) { return p.v < x; });
    if (it == pts.begin())
        return it->i;
    if (it == pts.end())
        return pts.back().i;
    const CurvePoint& b = *it;
    const CurvePoint& a = *(it - 1);
    const double w = (v - a.v) / (b.v - a.v);
    return a.i + w * (b.i - a.i);
}

} // namespace

CurveMetrics curve_metrics(const Curve& curve, std::optional<double> module_area_m2,
                           const CurrentSource* source) {
    const auto& pts = curve.points;
    if (pts.size() < 3)
        throw ValidationError("curve_metrics: malformed curve (fewer than 3 points)");
    if (pts.front().v != 0.0)
        throw ValidationError("curve_metrics: malformed curve (must start at v = 0)");

    CurveMetrics out;
    out.isc = pts.front().i;

    // Open-circuit crossing; a sweep ending exactly on zero counts.
    std::size_t cross = pts.size();
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (pts[k].i > 0.0 && pts[k + 1].i <= 0.0) {
            cross = k;
            break;
        }
    }
    if (cross == pts.size()) {
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            if (pts[k + 1].i > pts[k].i)
                throw ValidationError("curve_metrics: malformed curve (current "
                                      "increases and never crosses zero)");
        }
        // Sweep ended before open circuit; voc stays absent.
    } else {
        const CurvePoint& a = pts[cross];
        const CurvePoint& b = pts[cross + 1];
        double voc = a.v + (b.v - a.v) * (a.i - 0.0) / (a.i - b.i);
        if (source) {
            double lo = a.v, hi = b.v;
            for (int iter = 0; iter < 100 && hi - lo > 1e-10; ++iter) {
                const double mid = 0.5 * (lo + hi);
                if (source->current(mid, curve.irradiance, curve.temperature_k) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            voc = 0.5 * (lo + hi);
        }
        out.voc = voc;
    }

    // Maximum power point: grid argmax, then refinement.
    std::size_t k_max = 0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        if (pts[k].p > pts[k_max].p)
            k_max = k;
    }
    const std::size_t k_lo = k_max > 0 ? k_max - 1 : k_max;
    const std::size_t k_hi = k_max + 1 < pts.size() ? k_max + 1 : k_max;
    if (source && k_lo < k_hi) {
        auto [vmp, imp] = golden_max_power(*source, curve.irradiance,
                                           curve.temperature_k, pts[k_lo].v,
                                           pts[k_hi].v, 1e-6);
        out.vmp = vmp;
        out.imp = imp;
    } else if (k_lo < k_max && k_max < k_hi) {
        out.vmp = parabola_vertex(pts[k_lo], pts[k_max], pts[k_hi]);
        out.imp = interpolate_current(curve, out.vmp);
    } else {
        out.vmp = pts[k_max].v;
        out.imp = pts[k_max].i;
    }
    out.pmp = out.vmp * out.imp;

    if (out.voc && out.isc > 0.0 && *out.voc > 0.0)
        out.fill_factor = out.pmp / (*out.voc * out.isc);
    if (module_area_m2) {
        if (!(*module_area_m2 > 0.0))
            throw ValidationError("curve_metrics: module area must be > 0");
        if (curve.irradiance > 0.0)
            out.efficiency = out.pmp / (curve.irradiance * *module_area_m2);
    }
    return out;
}

CurveComparison compare_curves(const Curve& test, const Curve& reference) {
    if (test.points.size() != reference.points.size())
        throw ValidationError("compare_curves: point counts differ");
    for (std::size_t k = 0; k < test.points.size(); ++k) {
        if (test.points[k].v != reference.points[k].v)
            throw ValidationError("compare_curves: voltage grids differ at index " +
                                  std::to_string(k));
    }

    double num_i = 0.0, num_p = 0.0, den_i = 0.0, den_p = 0.0;
    CurveComparison out;
    for (std::size_t k = 0; k < test.points.size(); ++k) {
        const double di = test.points[k].i - reference.points[k].i;
        const double dp = test.points[k].p - reference.points[k].p;
        num_i += di * di;
        num_p += dp * dp;
        den_i += reference.points[k].i * reference.points[k].i;
        den_p += reference.points[k].p * reference.points[k].p;
        out.max_abs_dev_i = std::max(out.max_abs_dev_i, std::fabs(di));
        out.max_abs_dev_p = std::max(out.max_abs_dev_p, std::fabs(dp));
    }
    if (den_i == 0.0 || den_p == 0.0)
        throw ValidationError("compare_curves: reference curve is identically zero");
    out.rel_mse_i = num_i / den_i;
    out.rel_mse_p = num_p / den_p;
    return out;
}

} // namespace pvmod
