#ifndef PVMOD_RBF_TRAIN_HPP
#define PVMOD_RBF_TRAIN_HPP

#include "pvmod/dataset_io.hpp"
#include "pvmod/rbf_model.hpp"

#include <cstdint>
#include <vector>

namespace pvmod {

struct TrainConfig {
    int max_neurons = 16;
    double mse_goal = 0.02;        // relative MSE stop target
    double sigma_init = 1.0;       // spread in scaled input units
    int fine_tune_epochs = 200;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;        // reserved for stochastic variants
};

// Per-step training record, filled when a trace target is supplied.
struct TrainTrace {
    std::vector<double> greedy_rel_mse;  // after each added neuron
    std::vector<double> tune_rel_mse;    // after each accepted epoch
};

// Grows a network one neuron at a time: the sample with the largest
// absolute residual becomes the next centroid, and all weights plus the
// output bias are re-solved by ridge least squares. Stops at the error
// goal or at max_neurons. Inputs are min-max scaled to [0, 1] from the
// training data; the kernel is the standard summed-square Gaussian.
RbfSurrogate build_greedy(const Dataset& data, const TrainConfig& cfg,
                          TrainTrace* trace = nullptr);

// Guarded full-batch gradient descent on the training MSE over weights,
// bias, centroids, and the shared spread. Steps that would increase the
// error (or make the spread non-positive) are rejected and retried with
// a halved learning rate, so the returned network is never worse than
// the input network on the training data.
RbfSurrogate fine_tune(const RbfSurrogate& net, const Dataset& data,
                       const TrainConfig& cfg, TrainTrace* trace = nullptr);

// Sum of squared prediction errors over the dataset divided by the sum
// of squared targets.
double relative_mse(const RbfSurrogate& net, const Dataset& data);

// Gradient of the mean squared training error with respect to the packed
// parameter vector [w_0..w_{L-1}, bias, c_v_0, c_g_0, (c_t_0,) ...,
// sigma]; exposed so it can be checked against finite differences.
std::vector<double> loss_gradient(const RbfSurrogate& net, const Dataset& data);

// Mean squared training error matching loss_gradient's objective.
double mean_squared_error(const RbfSurrogate& net, const Dataset& data);

// Packs/unpacks the tunable parameters in the loss_gradient order.
std::vector<double> pack_parameters(const RbfSurrogate& net);
RbfSurrogate with_parameters(const RbfSurrogate& net,
                             const std::vector<double>& params);

} // namespace pvmod

#endif
