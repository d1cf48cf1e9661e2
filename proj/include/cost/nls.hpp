#pragma once

#include "cost/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cost {

struct FitOptions {
    int max_iterations = 200;
    double loss_tolerance = 1e-10;
    double step_tolerance = 1e-10;
    std::optional<Vector> initial_point;  // all zeros when unset
    double damping_initial = 1e-3;

    // Multi-start: `restarts` extra starting points drawn uniformly from
    // initial_point +/- restart_spread in each coordinate; the lowest loss wins.
    int restarts = 0;
    double restart_spread = 3.0;
    std::uint64_t restart_seed = 0x5eed;

    void validate() const;
};

struct FitResult {
    Vector theta_hat;
    double final_loss = 0.0;
    int iterations = 0;
    bool converged = false;
    // Loss after every accepted step, starting with the initial loss.
    std::vector<double> loss_history;
};

// Damped Gauss-Newton (Levenberg-Marquardt) minimisation of
// sum_i {Y_i - g(theta, X_i)}^2.
FitResult fit(const ParametricModel& model, const Dataset& data, const FitOptions& opts = {});

}  // namespace cost
