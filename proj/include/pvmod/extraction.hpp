#ifndef PVMOD_EXTRACTION_HPP
#define PVMOD_EXTRACTION_HPP

#include "pvmod/characteristics.hpp"
#include "pvmod/circuit_models.hpp"

#include <array>
#include <vector>

namespace pvmod {

struct FitOptions {
    double goal = 1e-8;        // RMS residual target, A
    int max_iterations = 100;
    double lambda_init = 1e-3;
    SolveOptions solver;
};

struct FitReport {
    FiveParamModel model;                 // photocurrent referenced to g_ref
    double g_ref = 1000.0;                // irradiance the photocurrent refers to
    double residual_norm = 0.0;           // RMS residual, A
    int iterations = 0;
    bool converged = false;
    std::array<double, 5> relative_step{};  // |last step| / |value| per parameter
    std::vector<double> iteration_rms;      // RMS after each accepted step
};

// Recovers (iph, i0, ideality, rs, rsh) from observed curves by damped
// least squares on the solved current. i0 and rsh are optimized in log
// space; a single photocurrent is fitted and tied across curves through
// the linear irradiance scaling, with g_ref taken as the largest curve
// irradiance. The damping factor starts at lambda_init, is multiplied by
// 10 when a step is rejected and divided by 10 when accepted.
FitReport fit_five_param(const std::vector<Curve>& curves,
                         const FiveParamModel& init, const FitOptions& opts = {});

} // namespace pvmod

#endif
