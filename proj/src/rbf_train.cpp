#include "pvmod/rbf_train.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace pvmod {

namespace {

struct ScaledInputs {
    std::vector<double> v;
    std::vector<double> g;
    std::vector<double> t;  // empty when the dataset has no temperature channel
    bool has_t = false;
};

void check_config(const TrainConfig& cfg) {
    if (cfg.max_neurons < 1)
        throw ValidationError("TrainConfig: max_neurons must be >= 1");
    if (!(cfg.mse_goal > 0.0 && cfg.mse_goal < 1.0))
        throw ValidationError("TrainConfig: mse_goal must lie in (0, 1)");
    if (!(cfg.sigma_init > 0.0))
        throw ValidationError("TrainConfig: sigma_init must be > 0");
    if (cfg.fine_tune_epochs < 0)
        throw ValidationError("TrainConfig: fine_tune_epochs must be >= 0");
    if (!(cfg.learning_rate > 0.0))
        throw ValidationError("TrainConfig: learning_rate must be > 0");
}

void check_data(const Dataset& data) {
    if (data.samples.empty())
        throw ValidationError("training requires a non-empty dataset");
    bool first = true;
    bool has_t = false;
    for (std::size_t k = 0; k < data.samples.size(); ++k) {
        const Sample& s = data.samples[k];
        if (!std::isfinite(s.target) || !std::isfinite(s.voltage) ||
            !std::isfinite(s.irradiance))
            throw DataError("sample " + std::to_string(k) +
                            " has a non-finite field");
        if (first) {
            has_t = s.temperature.has_value();
            first = false;
        } else if (s.temperature.has_value() != has_t) {
            throw DataError("dataset mixes samples with and without temperature");
        }
    }
}

AxisScaling min_max_axis(double lo, double hi) {
    AxisScaling s;
    s.offset = lo;
    s.scale = hi > lo ? 1.0 / (hi - lo) : 1.0;
    return s;
}

InputScaling min_max_scaling(const Dataset& data, bool has_t) {
    double v_lo = data.samples.front().voltage, v_hi = v_lo;
    double g_lo = data.samples.front().irradiance, g_hi = g_lo;
    double t_lo = 0.0, t_hi = 0.0;
    if (has_t)
        t_lo = t_hi = *data.samples.front().temperature;
    for (const Sample& s : data.samples) {
        v_lo = std::min(v_lo, s.voltage);
        v_hi = std::max(v_hi, s.voltage);
        g_lo = std::min(g_lo, s.irradiance);
        g_hi = std::max(g_hi, s.irradiance);
        if (has_t) {
            t_lo = std::min(t_lo, *s.temperature);
            t_hi = std::max(t_hi, *s.temperature);
        }
    }
    InputScaling scaling;
    scaling.v = min_max_axis(v_lo, v_hi);
    scaling.g = min_max_axis(g_lo, g_hi);
    if (has_t)
        scaling.t = min_max_axis(t_lo, t_hi);
    return scaling;
}

ScaledInputs scale_inputs(const Dataset& data, const InputScaling& scaling,
                          bool has_t) {
    ScaledInputs x;
    x.has_t = has_t;
    const std::size_t n = data.samples.size();
    x.v.resize(n);
    x.g.resize(n);
    if (has_t)
        x.t.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Sample& s = data.samples[k];
        x.v[k] = (s.voltage - scaling.v.offset) * scaling.v.scale;
        x.g[k] = (s.irradiance - scaling.g.offset) * scaling.g.scale;
        if (has_t)
            x.t[k] = (*s.temperature - scaling.t.offset) * scaling.t.scale;
    }
    return x;
}

InputPoint sample_point(const Sample& s) {
    return InputPoint{s.voltage, s.irradiance, s.temperature};
}

double sum_squared_targets(const Dataset& data) {
    double den = 0.0;
    for (const Sample& s : data.samples)
        den += s.target * s.target;
    return den;
}

// Ridge least squares min ||A x - y||^2 + lambda ||x||^2, solved by
// Householder QR of the stacked system [A; sqrt(lambda) I]. The ridge
// rows keep the triangle nonsingular even for duplicate columns.
std::vector<double> solve_ridge(const std::vector<double>& a_rowmajor,
                                std::size_t rows, std::size_t cols,
                                const std::vector<double>& y, double lambda) {
    const std::size_t m = rows + cols;
    std::vector<double> b(m * cols, 0.0);  // column-major stacked matrix
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            b[c * m + r] = a_rowmajor[r * cols + c];
    const double sqrt_lambda = std::sqrt(lambda);
    for (std::size_t c = 0; c < cols; ++c)
        b[c * m + rows + c] = sqrt_lambda;

    std::vector<double> rhs(m, 0.0);
    std::copy(y.begin(), y.end(), rhs.begin());

    std::vector<double> v(m);
    for (std::size_t j = 0; j < cols; ++j) {
        double norm2 = 0.0;
        for (std::size_t k = j; k < m; ++k)
            norm2 += b[j * m + k] * b[j * m + k];
        const double norm = std::sqrt(norm2);
        if (norm == 0.0)
            continue;
        const double bjj = b[j * m + j];
        const double alpha = bjj >= 0.0 ? -norm : norm;
        v[j] = bjj - alpha;
        double vtv = v[j] * v[j];
        for (std::size_t k = j + 1; k < m; ++k) {
            v[k] = b[j * m + k];
            vtv += v[k] * v[k];
        }
        if (vtv == 0.0)
            continue;
        for (std::size_t c = j; c < cols; ++c) {
            double dot = 0.0;
            for (std::size_t k = j; k < m; ++k)
                dot += v[k] * b[c * m + k];
            const double f = 2.0 * dot / vtv;
            for (std::size_t k = j; k < m; ++k)
                b[c * m + k] -= f * v[k];
        }
        double dot = 0.0;
        for (std::size_t k = j; k < m; ++k)
            dot += v[k] * rhs[k];
        const double f = 2.0 * dot / vtv;
        for (std::size_t k = j; k < m; ++k)
            rhs[k] -= f * v[k];
        b[j * m + j] = alpha;
    }

    std::vector<double> x(cols, 0.0);
    for (std::size_t jj = cols; jj-- > 0;) {
        double s = rhs[jj];
        for (std::size_t c = jj + 1; c < cols; ++c)
            s -= b[c * m + jj] * x[c];
        const double diag = b[jj * m + jj];
        x[jj] = std::fabs(diag) > 1e-300 ? s / diag : 0.0;
    }
    return x;
}

double activation_from_scaled(double dv, double dg, double sigma) {
    const double exponent = dv * dv + dg * dg;
    return std::exp(-exponent / (sigma * sigma));
}

double activation_from_scaled(double dv, double dg, double dt, double sigma) {
    const double exponent = dv * dv + dg * dg + dt * dt;
    return std::exp(-exponent / (sigma * sigma));
}

// Ridge refit of the output layer (weights and bias) at the network's
// current centroids and spread; the same solve the greedy builder uses.
RbfSurrogate refit_output_layer(const RbfSurrogate& net, const Dataset& data) {
    const std::size_t n = data.samples.size();
    const std::size_t L = net.neurons.size();
    const std::size_t cols = L + 1;
    std::vector<double> design(n * cols);
    std::vector<double> targets(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Sample& s = data.samples[k];
        for (std::size_t j = 0; j < L; ++j)
            design[k * cols + j] = gaussian_activation(
                sample_point(s), net.neurons[j], net.sigma, net.kernel_mode,
                net.scaling);
        design[k * cols + L] = 1.0;
        targets[k] = s.target;
    }
    const std::vector<double> coeffs = solve_ridge(design, n, cols, targets, 1e-10);
    RbfSurrogate out = net;
    for (std::size_t j = 0; j < L; ++j)
        out.neurons[j].weight = coeffs[j];
    out.output_bias = coeffs[L];
    return out;
}

} // namespace

double relative_mse(const RbfSurrogate& net, const Dataset& data) {
    if (data.samples.empty())
        throw ValidationError("relative_mse: dataset is empty");
    const double den = sum_squared_targets(data);
    if (den == 0.0)
        throw ValidationError("relative_mse: undefined for identically zero targets");
    double num = 0.0;
    for (const Sample& s : data.samples) {
        const double r = evaluate(net, sample_point(s)) - s.target;
        num += r * r;
    }
    return num / den;
}

double mean_squared_error(const RbfSurrogate& net, const Dataset& data) {
    if (data.samples.empty())
        throw ValidationError("mean_squared_error: dataset is empty");
    double num = 0.0;
    for (const Sample& s : data.samples) {
        const double r = evaluate(net, sample_point(s)) - s.target;
        num += r * r;
    }
    return num / static_cast<double>(data.samples.size());
}

RbfSurrogate build_greedy(const Dataset& data, const TrainConfig& cfg,
                          TrainTrace* trace) {
    check_config(cfg);
    check_data(data);
    const double den = sum_squared_targets(data);
    if (den == 0.0)
        throw DataError("build_greedy: targets are identically zero; the "
                        "relative error goal is undefined");

    const bool has_t = data.samples.front().temperature.has_value();
    const std::size_t n = data.samples.size();

    RbfSurrogate net;
    net.sigma = cfg.sigma_init;
    net.kernel_mode = KernelMode::sum_of_squares;
    net.scaling = min_max_scaling(data, has_t);
    net.output_kind = data.kind;
    net.output_bias = 0.0;

    const ScaledInputs x = scale_inputs(data, net.scaling, has_t);

    std::vector<double> residual(n);
    for (std::size_t k = 0; k < n; ++k)
        residual[k] = data.samples[k].target;

    while (static_cast<int>(net.neurons.size()) < cfg.max_neurons) {
        // Largest-residual sample that is not already a centroid.
        std::size_t pick = n;
        double best = -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double mag = std::fabs(residual[k]);
            if (mag <= best)
                continue;
            bool duplicate = false;
            for (const RbfNeuron& nr : net.neurons) {
                if (nr.centroid_v == x.v[k] && nr.centroid_g == x.g[k] &&
                    (!has_t || *nr.centroid_t == x.t[k])) {
                    duplicate = true;
                    break;
                }
            }
            if (!duplicate) {
                best = mag;
                pick = k;
            }
        }
        if (pick == n)
            break;  // every sample is already a centroid

        RbfNeuron neuron;
        neuron.weight = 0.0;
        neuron.centroid_v = x.v[pick];
        neuron.centroid_g = x.g[pick];
        if (has_t)
            neuron.centroid_t = x.t[pick];
        net.neurons.push_back(neuron);

        // Design matrix with a trailing ones column for the bias.
        const std::size_t L = net.neurons.size();
        const std::size_t cols = L + 1;
        std::vector<double> design(n * cols);
        std::vector<double> targets(n);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t j = 0; j < L; ++j) {
                const RbfNeuron& nr = net.neurons[j];
                const double dv = x.v[k] - nr.centroid_v;
                const double dg = x.g[k] - nr.centroid_g;
                design[k * cols + j] =
                    has_t ? activation_from_scaled(dv, dg, x.t[k] - *nr.centroid_t,
                                                   net.sigma)
                          : activation_from_scaled(dv, dg, net.sigma);
            }
            design[k * cols + L] = 1.0;
            targets[k] = data.samples[k].target;
        }
        std::vector<double> coeffs = solve_ridge(design, n, cols, targets, 1e-10);

        auto residual_sum = [&](const std::vector<double>& c,
                                std::vector<double>& out) {
            double num = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                double yhat = c[L];
                for (std::size_t j = 0; j < L; ++j)
                    yhat += c[j] * design[k * cols + j];
                out[k] = data.samples[k].target - yhat;
                num += out[k] * out[k];
            }
            return num;
        };

        std::vector<double> new_residual(n);
        double num = residual_sum(coeffs, new_residual);

        // The ridge penalty is felt when the solve settles on huge
        // cancelling weights; keeping the previous weights (new neuron at
        // zero) is then the better fit and keeps the error non-increasing.
        if (L > 1) {
            std::vector<double> previous(cols, 0.0);
            for (std::size_t j = 0; j + 1 < L; ++j)
                previous[j] = net.neurons[j].weight;
            previous[L] = net.output_bias;
            std::vector<double> prev_residual(n);
            const double prev_num = residual_sum(previous, prev_residual);
            if (prev_num < num) {
                coeffs = std::move(previous);
                new_residual = std::move(prev_residual);
                num = prev_num;
            }
        }

        for (std::size_t j = 0; j < L; ++j)
            net.neurons[j].weight = coeffs[j];
        net.output_bias = coeffs[L];
        residual = std::move(new_residual);
        const double rel = num / den;
        if (trace)
            trace->greedy_rel_mse.push_back(rel);
        if (rel <= cfg.mse_goal)
            break;
    }
    return net;
}

std::vector<double> pack_parameters(const RbfSurrogate& net) {
    std::vector<double> p;
    p.reserve(net.neurons.size() * 4 + 2);
    for (const RbfNeuron& n : net.neurons)
        p.push_back(n.weight);
    p.push_back(net.output_bias);
    for (const RbfNeuron& n : net.neurons) {
        p.push_back(n.centroid_v);
        p.push_back(n.centroid_g);
        if (n.centroid_t)
            p.push_back(*n.centroid_t);
    }
    p.push_back(net.sigma);
    return p;
}

RbfSurrogate with_parameters(const RbfSurrogate& net,
                             const std::vector<double>& params) {
    RbfSurrogate out = net;
    std::size_t k = 0;
    for (RbfNeuron& n : out.neurons)
        n.weight = params.at(k++);
    out.output_bias = params.at(k++);
    for (RbfNeuron& n : out.neurons) {
        n.centroid_v = params.at(k++);
        n.centroid_g = params.at(k++);
        if (n.centroid_t)
            n.centroid_t = params.at(k++);
    }
    out.sigma = params.at(k++);
    if (k != params.size())
        throw ValidationError("with_parameters: parameter count mismatch");
    return out;
}

std::vector<double> loss_gradient(const RbfSurrogate& net, const Dataset& data) {
    if (net.neurons.empty())
        throw ValidationError("loss_gradient: surrogate has no neurons");
    if (data.samples.empty())
        throw ValidationError("loss_gradient: dataset is empty");

    const std::size_t L = net.neurons.size();
    const bool has_t = net.neurons.front().centroid_t.has_value();
    const std::size_t per_centroid = has_t ? 3 : 2;
    const std::size_t n_params = L + 1 + L * per_centroid + 1;
    std::vector<double> grad(n_params, 0.0);

    const double inv_n = 1.0 / static_cast<double>(data.samples.size());
    const double sig2 = net.sigma * net.sigma;
    const double sig3 = sig2 * net.sigma;

    for (const Sample& s : data.samples) {
        const InputPoint pt = sample_point(s);
        const double xv = (s.voltage - net.scaling.v.offset) * net.scaling.v.scale;
        const double xg = (s.irradiance - net.scaling.g.offset) * net.scaling.g.scale;
        double xt = 0.0;
        if (has_t) {
            if (!s.temperature)
                throw ValidationError("loss_gradient: 3-input network needs a "
                                      "temperature channel");
            xt = (*s.temperature - net.scaling.t.offset) * net.scaling.t.scale;
        }

        const double r = evaluate(net, pt) - s.target;
        const double factor = 2.0 * inv_n * r;

        grad[L] += factor;  // bias
        for (std::size_t j = 0; j < L; ++j) {
            const RbfNeuron& nr = net.neurons[j];
            const double dv = xv - nr.centroid_v;
            const double dg = xg - nr.centroid_g;
            const double dt = has_t ? xt - *nr.centroid_t : 0.0;

            double phi, dexp_dcv, dexp_dcg, dexp_dct, dexp_dsigma;
            if (net.kernel_mode == KernelMode::sum_of_squares) {
                const double d2 = dv * dv + dg * dg + (has_t ? dt * dt : 0.0);
                phi = std::exp(-d2 / sig2);
                dexp_dcv = 2.0 * dv / sig2;
                dexp_dcg = 2.0 * dg / sig2;
                dexp_dct = has_t ? 2.0 * dt / sig2 : 0.0;
                dexp_dsigma = 2.0 * d2 / sig3;
            } else {
                double prod = dv * dv * dg * dg;
                if (has_t)
                    prod *= dt * dt;
                phi = std::exp(-prod / sig2);
                const double tail_v = 2.0 * dv * dg * dg * (has_t ? dt * dt : 1.0);
                const double tail_g = 2.0 * dg * dv * dv * (has_t ? dt * dt : 1.0);
                dexp_dcv = tail_v / sig2;
                dexp_dcg = tail_g / sig2;
                dexp_dct = has_t ? 2.0 * dt * dv * dv * dg * dg / sig2 : 0.0;
                dexp_dsigma = 2.0 * prod / sig3;
            }

            grad[j] += factor * phi;  // weight
            const double wphi = nr.weight * phi;
            grad[L + 1 + j * per_centroid + 0] += factor * wphi * dexp_dcv;
            grad[L + 1 + j * per_centroid + 1] += factor * wphi * dexp_dcg;
            if (has_t)
                grad[L + 1 + j * per_centroid + 2] += factor * wphi * dexp_dct;
            grad[n_params - 1] += factor * wphi * dexp_dsigma;
        }
    }
    return grad;
}

RbfSurrogate fine_tune(const RbfSurrogate& net0, const Dataset& data,
                       const TrainConfig& cfg, TrainTrace* trace) {
    check_config(cfg);
    if (cfg.fine_tune_epochs == 0)
        return net0;
    check_data(data);
    if (net0.neurons.empty())
        throw ValidationError("fine_tune: surrogate has no neurons");

    const double den = sum_squared_targets(data);
    RbfSurrogate net = net0;

    // Descent runs on the reduced objective of separable least squares:
    // the centroids and the spread move by sign-based steps with one
    // adaptive step size per parameter, and every trial re-solves the
    // output layer (weights, bias) exactly before the move is accepted
    // or rejected. A greedy build leaves huge cancelling weights, and on
    // the full parameter vector no usable step survives the curvature
    // they induce; on the reduced objective the nonlinear parameters
    // move freely and the linear layer follows optimally.
    //
    // Steps grow 1.2x while the gradient sign holds and shrink 0.5x when
    // it flips; a rejected epoch halves all of them.
    {
        RbfSurrogate refitted = refit_output_layer(net, data);
        if (mean_squared_error(refitted, data) <= mean_squared_error(net, data))
            net = std::move(refitted);
    }
    std::vector<double> params = pack_parameters(net);
    double mse = mean_squared_error(net, data);

    const std::size_t n_params = params.size();
    const std::size_t n_linear = net.neurons.size() + 1;  // weights + bias
    std::vector<double> step(n_params, 0.0);
    for (std::size_t j = n_linear; j < n_params; ++j)
        step[j] = cfg.learning_rate;  // scaled-space units
    std::vector<double> prev_sign(n_params, 0.0);
    constexpr double k_step_min = 1e-14;
    constexpr double k_step_max = 0.25;  // quarter of the scaled domain

    std::vector<double> candidate(n_params);
    for (int epoch = 0; epoch < cfg.fine_tune_epochs; ++epoch) {
        const std::vector<double> grad = loss_gradient(net, data);

        candidate = params;
        for (std::size_t j = n_linear; j < n_params; ++j) {
            double g = grad[j] > 0.0 ? 1.0 : (grad[j] < 0.0 ? -1.0 : 0.0);
            const double correlation = prev_sign[j] * g;
            if (correlation > 0.0)
                step[j] = std::min(step[j] * 1.2, k_step_max);
            else if (correlation < 0.0) {
                step[j] = std::max(step[j] * 0.5, k_step_min);
                g = 0.0;  // skip this parameter right after a sign flip
            }
            prev_sign[j] = g;
            candidate[j] = params[j] - g * step[j];
        }

        bool accepted = false;
        if (candidate.back() > 0.0) {  // spread must stay positive
            bool valid = true;
            RbfSurrogate next;
            try {
                next = refit_output_layer(with_parameters(net, candidate), data);
                next.validate();
            } catch (const ValidationError&) {
                valid = false;
            }
            if (valid) {
                const double next_mse = mean_squared_error(next, data);
                if (next_mse <= mse) {
                    net = std::move(next);
                    params = pack_parameters(net);
                    mse = next_mse;
                    accepted = true;
                }
            }
        }
        if (!accepted) {
            for (std::size_t j = n_linear; j < n_params; ++j) {
                step[j] = std::max(step[j] * 0.5, k_step_min);
                prev_sign[j] = 0.0;
            }
        }

        if (trace && den > 0.0)
            trace->tune_rel_mse.push_back(
                mse * static_cast<double>(data.samples.size()) / den);
    }
    return net;
}

} // namespace pvmod
