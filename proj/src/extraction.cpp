#include "pvmod/extraction.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace pvmod {

namespace {

constexpr std::size_t k_num_params = 5;

struct Observation {
    double v;
    double i;
    double g;
    double t_k;
};

// Optimizer coordinates: [iph_ref, log(i0), ideality, rs, log(rsh)].
using Params = std::array<double, k_num_params>;

// Physical sanity box; trial steps outside it are rejected. Keeps the
// weakly observed parameters (rsh at high irradiance) from escaping to
// regions where their sensitivity vanishes.
constexpr Params k_lower = {0.0, -34.5, 0.05, 0.0, -4.6};
constexpr Params k_upper = {1e4, 0.0, 10.0, 1e3, 20.7};

bool inside_box(const Params& p) {
    for (std::size_t j = 0; j < k_num_params; ++j)
        if (p[j] < k_lower[j] || p[j] > k_upper[j])
            return false;
    return true;
}

Params pack(const FiveParamModel& m) {
    return {m.iph, std::log(m.i0), m.ideality, m.rs, std::log(m.rsh)};
}

FiveParamModel unpack(const Params& p, const ThermalContext& thermal) {
    return FiveParamModel(p[0], std::exp(p[1]), p[2], p[3], std::exp(p[4]),
                          thermal);
}

// Residual vector y - f(theta); throws if the model cannot be evaluated.
std::vector<double> residuals(const Params& p, int n_series,
                              const std::vector<Observation>& obs, double g_ref,
                              const SolveOptions& solver) {
    std::vector<double> r(obs.size());
    for (std::size_t k = 0; k < obs.size(); ++k) {
        FiveParamModel m = unpack(p, ThermalContext(n_series, obs[k].t_k));
        m = FiveParamModel(photocurrent_at_irradiance(m.iph, obs[k].g, g_ref),
                           m.i0, m.ideality, m.rs, m.rsh, m.thermal);
        r[k] = obs[k].i - solve_current(m, obs[k].v, solver);
    }
    return r;
}

double rms(const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r)
        s += x * x;
    return std::sqrt(s / static_cast<double>(r.size()));
}

// Gaussian elimination with partial pivoting; returns false when the
// damped normal matrix is numerically singular.
bool solve_linear(std::array<std::array<double, k_num_params>, k_num_params> a,
                  Params b, Params& x) {
    for (std::size_t col = 0; col < k_num_params; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < k_num_params; ++row)
            if (std::fabs(a[row][col]) > std::fabs(a[pivot][col]))
                pivot = row;
        if (std::fabs(a[pivot][col]) < 1e-300)
            return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t row = col + 1; row < k_num_params; ++row) {
            const double f = a[row][col] / a[col][col];
            for (std::size_t c = col; c < k_num_params; ++c)
                a[row][c] -= f * a[col][c];
            b[row] -= f * b[col];
        }
    }
    for (std::size_t row = k_num_params; row-- > 0;) {
        double s = b[row];
        for (std::size_t c = row + 1; c < k_num_params; ++c)
            s -= a[row][c] * x[c];
        x[row] = s / a[row][row];
    }
    return true;
}

} // namespace

FitReport fit_five_param(const std::vector<Curve>& curves,
                         const FiveParamModel& init, const FitOptions& opts) {
    std::vector<Observation> obs;
    double g_ref = 0.0;
    for (const Curve& c : curves) {
        g_ref = std::max(g_ref, c.irradiance);
        for (const CurvePoint& pt : c.points) {
            if (!std::isfinite(pt.v) || !std::isfinite(pt.i))
                throw DataError("fit_five_param: non-finite observation");
            obs.push_back({pt.v, pt.i, c.irradiance, c.temperature_k});
        }
    }
    if (obs.size() < k_num_params)
        throw DataError("fit_five_param: " + std::to_string(obs.size()) +
                        " data points cannot determine " +
                        std::to_string(k_num_params) + " parameters");
    if (!(g_ref > 0.0))
        throw DataError("fit_five_param: curves carry no positive irradiance");

    const int n_series = init.thermal.n_series;
    Params theta = pack(init);
    std::vector<double> r = residuals(theta, n_series, obs, g_ref, opts.solver);
    double cost = rms(r);

    FitReport report{unpack(theta, init.thermal), g_ref, cost, 0, false, {}, {}};
    report.iteration_rms.push_back(cost);
    if (cost <= opts.goal) {
        report.converged = true;
        return report;
    }

    double lambda = opts.lambda_init;
    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        report.iterations = iter;

        // Forward-difference Jacobian of the model current, column per
        // parameter: d f / d theta_j = -(d r / d theta_j).
        std::array<std::vector<double>, k_num_params> jac;
        bool jacobian_ok = true;
        for (std::size_t j = 0; j < k_num_params; ++j) {
            const double h = 1e-6 * std::max(std::fabs(theta[j]), 1e-8);
            Params shifted = theta;
            shifted[j] += h;
            try {
                const std::vector<double> r_shift =
                    residuals(shifted, n_series, obs, g_ref, opts.solver);
                jac[j].resize(obs.size());
                for (std::size_t k = 0; k < obs.size(); ++k)
                    jac[j][k] = (r[k] - r_shift[k]) / h;  // = d f_k / d theta_j
            } catch (const Error&) {
                jacobian_ok = false;
                break;
            }
        }
        if (!jacobian_ok)
            break;

        std::array<std::array<double, k_num_params>, k_num_params> jtj{};
        Params jtr{};
        for (std::size_t a = 0; a < k_num_params; ++a) {
            for (std::size_t b = a; b < k_num_params; ++b) {
                double s = 0.0;
                for (std::size_t k = 0; k < obs.size(); ++k)
                    s += jac[a][k] * jac[b][k];
                jtj[a][b] = jtj[b][a] = s;
            }
            double s = 0.0;
            for (std::size_t k = 0; k < obs.size(); ++k)
                s += jac[a][k] * r[k];
            jtr[a] = s;
        }
        double max_diag = 0.0;
        for (std::size_t a = 0; a < k_num_params; ++a)
            max_diag = std::max(max_diag, jtj[a][a]);

        bool accepted = false;
        Params step{};
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            auto damped = jtj;
            for (std::size_t a = 0; a < k_num_params; ++a)
                damped[a][a] +=
                    lambda * std::max(jtj[a][a], 1e-12 * std::max(max_diag, 1.0));
            if (!solve_linear(damped, jtr, step)) {
                lambda *= 10.0;
                continue;
            }
            // Clamp each component to 1 optimizer unit (a factor of e for
            // the log-space parameters) so one under-damped step cannot
            // jump into a flat region.
            Params trial = theta;
            for (std::size_t a = 0; a < k_num_params; ++a)
                trial[a] += std::clamp(step[a], -1.0, 1.0);
            if (!inside_box(trial)) {
                lambda *= 10.0;
                continue;
            }
            try {
                const std::vector<double> r_trial =
                    residuals(trial, n_series, obs, g_ref, opts.solver);
                const double trial_cost = rms(r_trial);
                if (trial_cost <= cost) {
                    const FiveParamModel before = unpack(theta, init.thermal);
                    theta = trial;
                    r = r_trial;
                    cost = trial_cost;
                    lambda /= 10.0;
                    accepted = true;
                    const FiveParamModel after = unpack(theta, init.thermal);
                    const double olds[5] = {before.iph, before.i0, before.ideality,
                                            before.rs, before.rsh};
                    const double news[5] = {after.iph, after.i0, after.ideality,
                                            after.rs, after.rsh};
                    for (int a = 0; a < 5; ++a)
                        report.relative_step[a] =
                            std::fabs(news[a] - olds[a]) /
                            std::max(std::fabs(olds[a]), 1e-30);
                } else {
                    lambda *= 10.0;
                }
            } catch (const Error&) {
                lambda *= 10.0;  // invalid trial model counts as a rejected step
            }
        }
        if (!accepted)
            break;

        report.iteration_rms.push_back(cost);
        double max_rel_step = 0.0;
        for (double s : report.relative_step)
            max_rel_step = std::max(max_rel_step, s);
        if (cost <= opts.goal || max_rel_step < 1e-12) {
            report.converged = true;
            break;
        }
    }

    report.model = unpack(theta, init.thermal);
    report.residual_norm = cost;
    if (cost <= opts.goal)
        report.converged = true;
    return report;
}

} // namespace pvmod
