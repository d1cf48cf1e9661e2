#pragma once

#include "cost/model.hpp"
#include "cost/nls.hpp"
#include "cost/weights.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace cost {

enum class SplitMode { seeded_shuffle, as_ordered };
enum class Sided { one, two };

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view name);
std::string_view to_string(Sided sided);
Sided parse_sided(std::string_view name);

struct SplitOptions {
    double fraction_n2 = 0.25;
    SplitMode mode = SplitMode::seeded_shuffle;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitPlan {
    Eigen::Index n1 = 0;
    Eigen::Index n2 = 0;
    SplitMode mode = SplitMode::seeded_shuffle;
    std::uint64_t seed = 0;
    double fraction_n2 = 0.25;
    // Row indices of the original dataset, ascending within each part.
    std::vector<Eigen::Index> first;
    std::vector<Eigen::Index> second;
};

struct SampleSplit {
    Dataset first;
    Dataset second;
    SplitPlan plan;
};

// n2 = round(fraction * n), n1 = n - n2. Both parts must hold at least
// max(2, min_part_size) rows.
SampleSplit split_sample(const Dataset& data, const SplitOptions& opts, Eigen::Index min_part_size = 2);

// (1/n) sum_i grad_i grad_i^T at theta.
Matrix sigma_hat(const ParametricModel& model, const VectorRef& theta, const Dataset& data);

// (1/sqrt(n1 n2)) e1^T W e2.
double numerator_stat(const VectorRef& e1, const VectorRef& e2, const Matrix& w);

struct TestResult {
    double statistic = 0.0;
    double numerator = 0.0;
    double conditional_sd = 0.0;
    double p_value_two_sided = 1.0;
    double p_value_one_sided = 0.5;
    Vector theta_hat_1;
    Vector theta_hat_2;
    Vector theta_hat_full;
    bool converged_1 = true;
    bool converged_2 = true;
    bool converged_full = true;
    SplitPlan split;
    double bandwidth_used = 0.0;
    // Ridge added to the gradient Gram matrix before inversion (0 when none).
    double sigma_ridge = 0.0;

    bool all_converged() const { return converged_1 && converged_2 && converged_full; }
};

// Thresholds shared by the fast path and the oracle.
inline constexpr double kDegenerateSd = 1e-12;
inline constexpr double kMaxSigmaCondition = 1e12;
inline constexpr double kRidgeStart = 1e-8;  // times trace / p
inline constexpr double kRidgeMax = 1e-2;    // times trace / p

TestResult cost_statistic(const ParametricModel& model, const Dataset& data, const WeightSpec& weight,
                          const SplitOptions& split, const FitOptions& fit_opts = {});

// Same contract as cost_statistic, evaluated with scalar loops and a separate
// Gauss-Jordan inverse. Refuses n > 500.
TestResult brute_force_statistic(const ParametricModel& model, const Dataset& data,
                                 const WeightSpec& weight, const SplitOptions& split,
                                 const FitOptions& fit_opts = {});

// Non-studentised full-sample U statistic; a diagnostic without a p-value.
double un_statistic(const ParametricModel& model, const Dataset& data, const WeightSpec& weight,
                    const FitOptions& fit_opts = {});

double standard_normal_cdf(double x);
double p_value(double statistic, Sided sided = Sided::two);

}  // namespace cost
