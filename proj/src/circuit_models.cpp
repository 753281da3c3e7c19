#include "pvmod/circuit_models.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <string>

namespace pvmod {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok)
        throw ValidationError(msg);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// Residual value with saturation folded into the sign: once the diode
// exponent passes the cap the residual is a huge negative number, and
// since the exponent grows with i the sign stays negative for all larger i.
struct ResidualEval {
    double value = 0.0;
    bool saturated = false;

    bool negative() const { return saturated || value < 0.0; }
    bool positive() const { return !saturated && value > 0.0; }
};

} // namespace

ThermalContext::ThermalContext(int n_series_cells, double temperature_kelvin)
    : n_series(n_series_cells), temperature_k(temperature_kelvin) {
    require(n_series >= 1, "ThermalContext: n_series must be >= 1");
    require(std::isfinite(temperature_k) && temperature_k > 0.0,
            "ThermalContext: temperature must be > 0 K");
}

double thermal_voltage(const ThermalContext& ctx) {
    return ctx.n_series * ThermalContext::k_boltzmann * ctx.temperature_k /
           ThermalContext::q_electron;
}

FiveParamModel::FiveParamModel(double iph_, double i0_, double ideality_,
                               double rs_, double rsh_, ThermalContext thermal_)
    : iph(iph_), i0(i0_), ideality(ideality_), rs(rs_), rsh(rsh_),
      thermal(thermal_) {
    require(std::isfinite(iph) && iph >= 0.0, "FiveParamModel: iph must be >= 0");
    require(std::isfinite(i0) && i0 > 0.0, "FiveParamModel: i0 must be > 0");
    require(std::isfinite(ideality) && ideality > 0.0,
            "FiveParamModel: ideality must be > 0");
    require(std::isfinite(rs) && rs >= 0.0, "FiveParamModel: rs must be >= 0");
    require(std::isfinite(rsh) && rsh > 0.0,
            "FiveParamModel: rsh must be positive and finite");
}

SevenParamExtension::SevenParamExtension(double rs_ref_, double delta_per_k_,
                                         double t_ref_k_, double i0_ref_,
                                         double g_ref_, double m_exponent_,
                                         double eg_over_k_ref_, double eg_over_k_)
    : rs_ref(rs_ref_), delta_per_k(delta_per_k_), t_ref_k(t_ref_k_),
      i0_ref(i0_ref_), g_ref(g_ref_), m_exponent(m_exponent_),
      eg_over_k_ref(eg_over_k_ref_), eg_over_k(eg_over_k_) {
    require(std::isfinite(rs_ref) && rs_ref >= 0.0,
            "SevenParamExtension: rs_ref must be >= 0");
    require(std::isfinite(t_ref_k) && t_ref_k > 0.0,
            "SevenParamExtension: t_ref must be > 0 K");
    require(std::isfinite(i0_ref) && i0_ref > 0.0,
            "SevenParamExtension: i0_ref must be > 0");
    require(std::isfinite(g_ref) && g_ref > 0.0,
            "SevenParamExtension: g_ref must be > 0");
    require(std::isfinite(delta_per_k), "SevenParamExtension: delta must be finite");
    require(std::isfinite(m_exponent), "SevenParamExtension: m must be finite");
    require(std::isfinite(eg_over_k_ref) && std::isfinite(eg_over_k),
            "SevenParamExtension: band-gap terms must be finite");
}

TwoDiodeModel::TwoDiodeModel(double iph_, double i01_, double i02_, double eta1_,
                             double eta2_, double rs_, double rsh_,
                             ThermalContext thermal_)
    : iph(iph_), i01(i01_), i02(i02_), eta1(eta1_), eta2(eta2_), rs(rs_),
      rsh(rsh_), thermal(thermal_) {
    require(std::isfinite(iph) && iph >= 0.0, "TwoDiodeModel: iph must be >= 0");
    require(std::isfinite(i01) && i01 >= 0.0, "TwoDiodeModel: i01 must be >= 0");
    require(std::isfinite(i02) && i02 >= 0.0, "TwoDiodeModel: i02 must be >= 0");
    require(std::isfinite(eta1) && eta1 > 0.0, "TwoDiodeModel: eta1 must be > 0");
    require(std::isfinite(eta2) && eta2 >= 1.0 && eta2 <= 2.0,
            "TwoDiodeModel: eta2 must lie in [1, 2]");
    require(std::isfinite(rs) && rs >= 0.0, "TwoDiodeModel: rs must be >= 0");
    require(std::isfinite(rsh) && rsh > 0.0,
            "TwoDiodeModel: rsh must be positive and finite");
}

namespace {

double diode_term(double isat, double arg, double exp_cap) {
    if (isat == 0.0)
        return 0.0;  // the term vanishes regardless of the exponent
    if (arg > exp_cap)
        throw SaturationError("diode exponent " + fmt(arg) +
                                  " exceeds cap " + fmt(exp_cap),
                              arg);
    return isat * std::expm1(arg);
}

ResidualEval try_residual(const std::function<double(double)>& residual, double i) {
    try {
        return {residual(i), false};
    } catch (const SaturationError&) {
        return {0.0, true};
    }
}

struct Bracket {
    double lo;
    double hi;
};

// f(lo) must be positive and f(hi) negative; starting from the nominal
// bracket, expand geometrically until the residual changes sign.
Bracket expand_bracket(const std::function<double(double)>& residual, double lo,
                       double hi, bool rs_is_zero) {
    ResidualEval flo = try_residual(residual, lo);
    int guard = 0;
    while (!flo.positive()) {
        if (flo.saturated && rs_is_zero) {
            // With rs = 0 the exponent does not depend on i: the residual
            // saturates everywhere, so surface the overflow to the caller.
            residual(lo);
        }
        if (++guard > 200)
            throw SolverError("current bracket sign check failed (lower end); "
                              "model residual never becomes positive",
                              lo, hi);
        lo -= std::max(1.0, std::fabs(lo));
        flo = try_residual(residual, lo);
    }
    ResidualEval fhi = try_residual(residual, hi);
    guard = 0;
    while (!fhi.negative()) {
        if (++guard > 200)
            throw SolverError("current bracket sign check failed (upper end); "
                              "model residual never becomes negative",
                              lo, hi);
        hi += std::max(1.0, std::fabs(hi));
        fhi = try_residual(residual, hi);
    }
    return {lo, hi};
}

void check_solve_preconditions(double v, const SolveOptions& opts) {
    if (!(opts.tol > 0.0))
        throw ValidationError("solve_current: tol must be > 0");
    if (!std::isfinite(v) || std::fabs(v) > opts.v_cap)
        throw ValidationError("solve_current: |v| exceeds cap of " +
                              fmt(opts.v_cap) + " V");
}

// Damped Newton inside a maintained sign-change bracket. Five failed
// step halvings in a row hand the iteration to a bisection step.
double newton_with_bracket(const std::function<double(double)>& residual,
                           const std::function<double(double)>& derivative,
                           double i_start, Bracket br, const SolveOptions& opts) {
    double i = std::min(std::max(i_start, br.lo), br.hi);
    ResidualEval f = try_residual(residual, i);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (!f.saturated && std::fabs(f.value) < opts.tol)
            return i;
        if (f.positive())
            br.lo = i;
        else
            br.hi = i;

        double i_next;
        bool stepped = false;
        if (!f.saturated) {
            double step = -f.value / derivative(i);
            for (int halving = 0; halving < 5; ++halving) {
                double candidate = i + step;
                if (candidate > br.lo && candidate < br.hi) {
                    ResidualEval fc = try_residual(residual, candidate);
                    if (!fc.saturated && std::fabs(fc.value) < std::fabs(f.value)) {
                        i_next = candidate;
                        f = fc;
                        stepped = true;
                        break;
                    }
                }
                step *= 0.5;
            }
        }
        if (!stepped) {
            i_next = 0.5 * (br.lo + br.hi);
            f = try_residual(residual, i_next);
        }
        i = i_next;
    }
    throw SolverError("solve_current: no convergence after " +
                          std::to_string(opts.max_iterations) + " iterations",
                      br.lo, br.hi);
}

} // namespace

double residual_five_param(const FiveParamModel& m, double v, double i,
                           double exp_cap) {
    const double avt = m.ideality * thermal_voltage(m.thermal);
    const double vj = v + i * m.rs;
    return m.iph - diode_term(m.i0, vj / avt, exp_cap) - vj / m.rsh - i;
}

double residual_two_diode(const TwoDiodeModel& m, double v, double i,
                          double exp_cap) {
    const double vt = thermal_voltage(m.thermal);
    const double vj = v + i * m.rs;
    return m.iph - diode_term(m.i01, vj / (m.eta1 * vt), exp_cap) -
           diode_term(m.i02, vj / (m.eta2 * vt), exp_cap) - vj / m.rsh - i;
}

double solve_current(const FiveParamModel& m, double v, const SolveOptions& opts) {
    check_solve_preconditions(v, opts);
    auto residual = [&](double i) { return residual_five_param(m, v, i, opts.exp_cap); };
    auto derivative = [&](double i) {
        const double avt = m.ideality * thermal_voltage(m.thermal);
        return -m.i0 * (m.rs / avt) * std::exp((v + i * m.rs) / avt) -
               m.rs / m.rsh - 1.0;
    };
    Bracket br = expand_bracket(residual, -(v / m.rsh + m.iph + 1.0),
                                m.iph + 1.0, m.rs == 0.0);
    return newton_with_bracket(residual, derivative, m.iph, br, opts);
}

double solve_current(const TwoDiodeModel& m, double v, const SolveOptions& opts) {
    check_solve_preconditions(v, opts);
    auto residual = [&](double i) { return residual_two_diode(m, v, i, opts.exp_cap); };
    auto derivative = [&](double i) {
        const double vt = thermal_voltage(m.thermal);
        const double vj = v + i * m.rs;
        double d = -m.rs / m.rsh - 1.0;
        if (m.i01 > 0.0)
            d -= m.i01 * (m.rs / (m.eta1 * vt)) * std::exp(vj / (m.eta1 * vt));
        if (m.i02 > 0.0)
            d -= m.i02 * (m.rs / (m.eta2 * vt)) * std::exp(vj / (m.eta2 * vt));
        return d;
    };
    Bracket br = expand_bracket(residual, -(v / m.rsh + m.iph + 1.0),
                                m.iph + 1.0, m.rs == 0.0);
    return newton_with_bracket(residual, derivative, m.iph, br, opts);
}

double solve_current_bisect(const FiveParamModel& m, double v,
                            const SolveOptions& opts) {
    check_solve_preconditions(v, opts);
    auto residual = [&](double i) { return residual_five_param(m, v, i, opts.exp_cap); };

    double lo = -(v / m.rsh + m.iph + 1.0);
    double hi = m.iph + 1.0;
    ResidualEval flo = try_residual(residual, lo);
    int guard = 0;
    while (!flo.positive()) {
        if (flo.saturated && m.rs == 0.0)
            residual(lo);  // rethrows the saturation error
        if (++guard > 200)
            throw SolverError("solve_current_bisect: sign check failed at the "
                              "lower bracket end",
                              lo, hi);
        lo -= std::max(1.0, std::fabs(lo));
        flo = try_residual(residual, lo);
    }
    ResidualEval fhi = try_residual(residual, hi);
    guard = 0;
    while (!fhi.negative()) {
        if (++guard > 200)
            throw SolverError("solve_current_bisect: sign check failed at the "
                              "upper bracket end",
                              lo, hi);
        hi += std::max(1.0, std::fabs(hi));
        fhi = try_residual(residual, hi);
    }

    for (int iter = 0; iter < 256; ++iter) {
        const double mid = 0.5 * (lo + hi);
        ResidualEval fm = try_residual(residual, mid);
        if (!fm.saturated && std::fabs(fm.value) < opts.tol)
            return mid;
        if (fm.positive())
            lo = mid;
        else
            hi = mid;
    }
    throw SolverError("solve_current_bisect: no convergence", lo, hi);
}

double power_at(const FiveParamModel& m, double v, const SolveOptions& opts) {
    return v * solve_current(m, v, opts);
}

double open_circuit_voltage(const FiveParamModel& m, const SolveOptions& opts) {
    double lo = 0.0;
    double hi = opts.v_cap;
    if (solve_current(m, lo, opts) <= 0.0)
        throw SolverError("open_circuit_voltage: short-circuit current is not "
                          "positive",
                          lo, hi);
    if (solve_current(m, hi, opts) >= 0.0)
        throw SolverError("open_circuit_voltage: current still positive at the "
                          "voltage cap",
                          lo, hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double i = solve_current(m, mid, opts);
        if (std::fabs(i) < opts.tol)
            return mid;
        if (i > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * std::max(1.0, hi))
            return 0.5 * (lo + hi);
    }
    return 0.5 * (lo + hi);
}

double rs_at_temperature(const SevenParamExtension& ext, double t_k) {
    if (!(t_k > 0.0))
        throw ValidationError("rs_at_temperature: t must be > 0 K");
    return ext.rs_ref * std::exp(ext.delta_per_k * (t_k - ext.t_ref_k));
}

double i0_at_conditions(const SevenParamExtension& ext, double g, double t_k) {
    if (!(g > 0.0))
        throw ValidationError("i0_at_conditions: g must be > 0");
    if (!(t_k > 0.0))
        throw ValidationError("i0_at_conditions: t must be > 0 K");
    const double ratio_t = t_k / ext.t_ref_k;
    return ext.i0_ref * std::pow(ext.g_ref / g, ext.m_exponent) * ratio_t *
           ratio_t * ratio_t *
           std::exp(ext.eg_over_k_ref / ext.t_ref_k - ext.eg_over_k / t_k);
}

double photocurrent_at_irradiance(double iph_ref, double g, double g_ref) {
    if (!(g >= 0.0))
        throw ValidationError("photocurrent_at_irradiance: g must be >= 0");
    if (!(g_ref > 0.0))
        throw ValidationError("photocurrent_at_irradiance: g_ref must be > 0");
    return iph_ref * g / g_ref;
}

} // namespace pvmod
