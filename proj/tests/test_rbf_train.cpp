#include "pvmod/rbf_train.hpp"

#include "pvmod/dataset_io.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace pvmod;
using pvmod::testing::ref_mod;
using pvmod::testing::uniform;

namespace {

Dataset grid_dataset_from_net(const RbfSurrogate& net, int n_side) {
    Dataset data;
    data.kind = net.output_kind;
    for (int a = 0; a < n_side; ++a) {
        for (int b = 0; b < n_side; ++b) {
            const double v = static_cast<double>(a) / (n_side - 1);
            const double g = static_cast<double>(b) / (n_side - 1);
            data.samples.push_back(
                {g, v, std::nullopt, evaluate(net, {v, g, std::nullopt})});
        }
    }
    return data;
}

RbfSurrogate random_network(std::mt19937_64& rng, int n_neurons, KernelMode mode,
                            bool with_t) {
    RbfSurrogate net;
    net.sigma = uniform(rng, 0.3, 1.5);
    net.kernel_mode = mode;
    net.output_bias = uniform(rng, -0.5, 0.5);
    for (int j = 0; j < n_neurons; ++j) {
        RbfNeuron n{uniform(rng, -2.0, 2.0), uniform(rng, 0.0, 1.0),
                    uniform(rng, 0.0, 1.0), std::nullopt};
        if (with_t)
            n.centroid_t = uniform(rng, 0.0, 1.0);
        net.neurons.push_back(n);
    }
    return net;
}

Dataset random_dataset(std::mt19937_64& rng, int n, bool with_t) {
    Dataset data;
    data.kind = OutputKind::current;
    for (int k = 0; k < n; ++k) {
        Sample s{uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), std::nullopt,
                 uniform(rng, -2.0, 2.0)};
        if (with_t)
            s.temperature = uniform(rng, 0.0, 1.0);
        data.samples.push_back(s);
    }
    return data;
}

} // namespace

TEST_CASE("relative MSE") {
    RbfSurrogate net;
    net.sigma = 1.0;
    net.output_bias = 1.0;
    net.neurons.push_back({0.0, 0.5, 0.5, std::nullopt});

    SUBCASE("single sample, y = 2, prediction 1") {
        Dataset data;
        data.samples.push_back({0.3, 0.3, std::nullopt, 2.0});
        CHECK(relative_mse(net, data) == 0.25);
    }
    SUBCASE("perfect predictions") {
        Dataset data;
        for (int k = 0; k < 5; ++k)
            data.samples.push_back({0.1 * k, 0.2 * k, std::nullopt, 1.0});
        CHECK(relative_mse(net, data) == 0.0);
    }
    SUBCASE("all-zero targets are undefined") {
        Dataset data;
        data.samples.push_back({0.3, 0.3, std::nullopt, 0.0});
        CHECK_THROWS_AS(relative_mse(net, data), ValidationError);
    }
    SUBCASE("empty dataset") {
        Dataset data;
        CHECK_THROWS_AS(relative_mse(net, data), ValidationError);
    }
}

TEST_CASE("greedy build recovers a known single-neuron network") {
    RbfSurrogate truth;
    truth.sigma = 0.25;
    truth.kernel_mode = KernelMode::sum_of_squares;
    truth.output_bias = 0.0;
    truth.neurons.push_back({2.0, 0.5, 0.5, std::nullopt});

    // 11x11 grid over [0,1]^2 contains the centroid at (0.5, 0.5).
    const Dataset data = grid_dataset_from_net(truth, 11);

    TrainConfig cfg;
    cfg.max_neurons = 4;
    cfg.mse_goal = 1e-8;
    cfg.sigma_init = 0.25;
    const RbfSurrogate net = build_greedy(data, cfg);

    REQUIRE(net.neurons.size() == 1);
    CHECK(net.neurons[0].centroid_v == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(net.neurons[0].centroid_g == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(net.neurons[0].weight == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(relative_mse(net, data) < 1e-6);
}

TEST_CASE("greedy build fits a constant target through the bias") {
    Dataset data;
    data.kind = OutputKind::power;
    for (int a = 0; a < 11; ++a)
        for (int b = 0; b < 11; ++b)
            data.samples.push_back({b / 10.0, a / 10.0, std::nullopt, 3.7});

    TrainConfig cfg;
    cfg.max_neurons = 1;
    cfg.mse_goal = 1e-12;
    const RbfSurrogate net = build_greedy(data, cfg);
    CHECK(net.neurons.size() == 1);
    CHECK(relative_mse(net, data) < 1e-12);
}

TEST_CASE("greedy training error is non-increasing in neuron count") {
    const FiveParamModel m = ref_mod();
    const Dataset data = generate_random(m, 500, {200.0, 1000.0}, {0.0, 30.0},
                                         OutputKind::current, 17);
    TrainConfig cfg;
    cfg.max_neurons = 12;
    cfg.mse_goal = 1e-9;  // unreachable; forces the full greedy run
    TrainTrace trace;
    const RbfSurrogate net = build_greedy(data, cfg, &trace);
    REQUIRE(trace.greedy_rel_mse.size() == 12);
    for (std::size_t k = 1; k < trace.greedy_rel_mse.size(); ++k)
        CHECK(trace.greedy_rel_mse[k] <=
              trace.greedy_rel_mse[k - 1] * (1.0 + 1e-12));
    CHECK(net.neurons.size() == 12);
    CHECK(net.kernel_mode == KernelMode::sum_of_squares);

    // Min-max scaling computed from the data itself.
    double v_lo = data.samples.front().voltage, v_hi = v_lo;
    double g_lo = data.samples.front().irradiance, g_hi = g_lo;
    for (const Sample& s : data.samples) {
        v_lo = std::min(v_lo, s.voltage);
        v_hi = std::max(v_hi, s.voltage);
        g_lo = std::min(g_lo, s.irradiance);
        g_hi = std::max(g_hi, s.irradiance);
    }
    CHECK(net.scaling.v.offset == v_lo);
    CHECK(net.scaling.v.scale == 1.0 / (v_hi - v_lo));
    CHECK(net.scaling.g.offset == g_lo);
    CHECK(net.scaling.g.scale == 1.0 / (g_hi - g_lo));
}

TEST_CASE("published current preset measured against synthetic data") {
    // Diagnostic only: the publication never states the spread, so there
    // is no value to assert; record what sigma = 1 in raw units gives.
    const FiveParamModel m = ref_mod();
    const Dataset data = generate_random(m, 1000, {200.0, 1000.0}, {0.0, 30.0},
                                         OutputKind::current, 1);
    const double mse = relative_mse(table1_current_network(1.0), data);
    CHECK(std::isfinite(mse));
    MESSAGE("table-1 current preset, sigma=1, relative MSE on synthetic data: ",
            mse);
}

TEST_CASE("training preconditions") {
    TrainConfig cfg;
    Dataset empty;
    CHECK_THROWS_AS(build_greedy(empty, cfg), ValidationError);

    Dataset zeros;
    zeros.samples.push_back({0.5, 0.5, std::nullopt, 0.0});
    CHECK_THROWS_AS(build_greedy(zeros, cfg), DataError);

    Dataset bad;
    bad.samples.push_back({0.5, 0.5, std::nullopt,
                           std::numeric_limits<double>::quiet_NaN()});
    CHECK_THROWS_AS(build_greedy(bad, cfg), DataError);

    Dataset ok;
    ok.samples.push_back({0.5, 0.5, std::nullopt, 1.0});
    TrainConfig bad_cfg;
    bad_cfg.max_neurons = 0;
    CHECK_THROWS_AS(build_greedy(ok, bad_cfg), ValidationError);
    bad_cfg = TrainConfig{};
    bad_cfg.mse_goal = 1.5;
    CHECK_THROWS_AS(build_greedy(ok, bad_cfg), ValidationError);
}

TEST_CASE("training is deterministic") {
    const FiveParamModel m = ref_mod();
    const Dataset data = generate_random(m, 400, {200.0, 1000.0}, {0.0, 30.0},
                                         OutputKind::current, 5);
    TrainConfig cfg;
    cfg.max_neurons = 8;
    cfg.fine_tune_epochs = 30;

    const RbfSurrogate a = fine_tune(build_greedy(data, cfg), data, cfg);
    const RbfSurrogate b = fine_tune(build_greedy(data, cfg), data, cfg);
    CHECK(serialize(a) == serialize(b));
}

TEST_CASE("zero fine-tune epochs return the identical network") {
    const RbfSurrogate net = table1_current_network(1.0);
    Dataset data;
    data.samples.push_back({600.0, 10.0, std::nullopt, 3.0});
    TrainConfig cfg;
    cfg.fine_tune_epochs = 0;
    const RbfSurrogate out = fine_tune(net, data, cfg);
    CHECK(serialize(out) == serialize(net));
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937_64 rng(424242);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const bool with_t = trial % 5 == 4;
        const KernelMode mode = (trial % 2) ? KernelMode::product_of_squares
                                            : KernelMode::sum_of_squares;
        const RbfSurrogate net =
            random_network(rng, 1 + static_cast<int>(rng() % 4), mode, with_t);
        const Dataset data = random_dataset(rng, 25, with_t);

        const std::vector<double> analytic = loss_gradient(net, data);
        const std::vector<double> params = pack_parameters(net);
        REQUIRE(analytic.size() == params.size());

        std::vector<double> fd(params.size());
        const double h = 1e-6;
        for (std::size_t j = 0; j < params.size(); ++j) {
            std::vector<double> plus = params, minus = params;
            plus[j] += h;
            minus[j] -= h;
            const double f_plus =
                mean_squared_error(with_parameters(net, plus), data);
            const double f_minus =
                mean_squared_error(with_parameters(net, minus), data);
            fd[j] = (f_plus - f_minus) / (2.0 * h);
        }

        double num = 0.0, den_a = 0.0, den_f = 0.0;
        for (std::size_t j = 0; j < params.size(); ++j) {
            num += (analytic[j] - fd[j]) * (analytic[j] - fd[j]);
            den_a += analytic[j] * analytic[j];
            den_f += fd[j] * fd[j];
        }
        const double denom = std::max(std::sqrt(den_a), std::sqrt(den_f));
        REQUIRE(denom > 0.0);
        CHECK(std::sqrt(num) / denom < 1e-5);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("fine tuning never increases the training error") {
    const FiveParamModel m = ref_mod();
    const Dataset data = generate_random(m, 600, {200.0, 1000.0}, {0.0, 30.0},
                                         OutputKind::current, 33);
    TrainConfig cfg;
    cfg.max_neurons = 10;
    cfg.fine_tune_epochs = 60;

    const RbfSurrogate base = build_greedy(data, cfg);
    const double before = relative_mse(base, data);
    TrainTrace trace;
    const RbfSurrogate tuned = fine_tune(base, data, cfg, &trace);
    const double after = relative_mse(tuned, data);
    CHECK(after <= before * (1.0 + 1e-12));
    for (std::size_t k = 1; k < trace.tune_rel_mse.size(); ++k)
        CHECK(trace.tune_rel_mse[k] <= trace.tune_rel_mse[k - 1] * (1.0 + 1e-12));
}
