#ifndef PVMOD_CIRCUIT_MODELS_HPP
#define PVMOD_CIRCUIT_MODELS_HPP

#include "pvmod/errors.hpp"

namespace pvmod {

// Series-cell count and cell temperature; the diode exponential's
// voltage scale Ns*k*T/q is derived from these.
struct ThermalContext {
    static constexpr double k_boltzmann = 1.380649e-23;  // J/K
    static constexpr double q_electron = 1.602177e-19;   // C

    int n_series;
    double temperature_k;

    ThermalContext(int n_series_cells, double temperature_kelvin);
};

// Module-level thermal voltage Ns*k*T/q, strictly positive.
double thermal_voltage(const ThermalContext& ctx);

// Single-diode equivalent circuit: photocurrent source, Shockley diode,
// series and shunt resistors. The residual in the terminal current is
// strictly decreasing, so the operating point is unique.
struct FiveParamModel {
    double iph;       // photocurrent, A (>= 0)
    double i0;        // diode reverse saturation current, A (> 0)
    double ideality;  // diode ideality factor (> 0)
    double rs;        // series resistance, ohm (>= 0)
    double rsh;       // shunt resistance, ohm (> 0, finite)
    ThermalContext thermal;

    FiveParamModel(double iph, double i0, double ideality, double rs,
                   double rsh, ThermalContext thermal);
};

// Environmental corrections for the seven-parameter extension:
// Rs(T) = rs_ref * exp(delta*(T - t_ref)) and
// I0(G,T) = i0_ref * (g_ref/G)^m * (T/t_ref)^3 * exp(eg_ref/t_ref - eg/T)
// where eg_ref and eg are the band-gap terms Eg/k (kelvin) at reference
// and operating temperature, supplied directly by the caller.
struct SevenParamExtension {
    double rs_ref;        // ohm (>= 0)
    double delta_per_k;   // 1/K
    double t_ref_k;       // K (> 0)
    double i0_ref;        // A (> 0)
    double g_ref;         // W/m^2 (> 0)
    double m_exponent;    // dimensionless
    double eg_over_k_ref; // Eg/k at reference temperature, K
    double eg_over_k;     // Eg/k at operating temperature, K

    SevenParamExtension(double rs_ref, double delta_per_k, double t_ref_k,
                        double i0_ref, double g_ref, double m_exponent,
                        double eg_over_k_ref, double eg_over_k);
};

// Double-diode circuit; with i02 = 0 and eta1 equal to the single-diode
// ideality factor its residual reduces to FiveParamModel's.
struct TwoDiodeModel {
    double iph;   // photocurrent, A (>= 0)
    double i01;   // first diode saturation current, A (>= 0)
    double i02;   // second diode saturation current, A (>= 0)
    double eta1;  // first diode quality factor (> 0), usually 1
    double eta2;  // second diode quality factor, in [1, 2]
    double rs;    // ohm (>= 0)
    double rsh;   // ohm (> 0, finite)
    ThermalContext thermal;

    TwoDiodeModel(double iph, double i01, double i02, double eta1,
                  double eta2, double rs, double rsh, ThermalContext thermal);
};

inline constexpr double k_default_exp_cap = 250.0;

struct SolveOptions {
    double tol = 1e-9;        // residual tolerance, A
    int max_iterations = 100;
    double v_cap = 100.0;     // accepted |v| range, V
    double exp_cap = 250.0;   // diode exponent cap before SaturationError
};

// Current-balance residual of the single-diode circuit at (v, i):
//   iph - i0*(exp((v + i*rs)/(a*Vt)) - 1) - (v + i*rs)/rsh - i
// Throws SaturationError when the diode exponent exceeds exp_cap.
double residual_five_param(const FiveParamModel& model, double v, double i,
                           double exp_cap = k_default_exp_cap);

// Same balance with both diode terms.
double residual_two_diode(const TwoDiodeModel& model, double v, double i,
                          double exp_cap = k_default_exp_cap);

// Terminal current at voltage v: damped Newton from i = iph inside a
// sign-change bracket, with bisection steps when Newton stalls.
double solve_current(const FiveParamModel& model, double v,
                     const SolveOptions& opts = {});

double solve_current(const TwoDiodeModel& model, double v,
                     const SolveOptions& opts = {});

// Pure bisection on the sign-change bracket; independent cross-check
// for the Newton path.
double solve_current_bisect(const FiveParamModel& model, double v,
                            const SolveOptions& opts = {});

// Terminal power v * solve_current(model, v).
double power_at(const FiveParamModel& model, double v,
                const SolveOptions& opts = {});

// Voltage where the terminal current crosses zero, found by bisection
// of solve_current over [0, v_cap].
double open_circuit_voltage(const FiveParamModel& model,
                            const SolveOptions& opts = {});

// Series resistance at temperature t: rs_ref * exp(delta*(t - t_ref)).
double rs_at_temperature(const SevenParamExtension& ext, double t_k);

// Saturation current at irradiance g and temperature t.
double i0_at_conditions(const SevenParamExtension& ext, double g, double t_k);

// Photocurrent scales linearly with irradiance.
double photocurrent_at_irradiance(double iph_ref, double g, double g_ref);

} // namespace pvmod

#endif
