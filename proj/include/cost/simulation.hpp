#pragma once

#include "cost/engine.hpp"
#include "cost/model.hpp"
#include "cost/nls.hpp"
#include "cost/weights.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace cost {

enum class Study { H11, H12, H21, H22, H31, H32, H33, H34, H41, H42 };
enum class CovarianceKind { identity, ar_half };

std::string_view to_string(Study study);
Study parse_study(std::string_view name);
std::string_view to_string(CovarianceKind kind);
CovarianceKind parse_covariance_kind(std::string_view name);

using Rng = std::mt19937_64;

struct StudyConfig {
    Study study = Study::H11;
    Eigen::Index n = 100;
    Eigen::Index q = 2;
    std::optional<Eigen::Index> p;  // required for H41/H42, derived otherwise
    double a = 0.0;
    CovarianceKind sigma_kind = CovarianceKind::identity;
    int reps = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    SplitOptions split;  // split.seed is replaced per replication
    WeightSpec weight;
    FitOptions fit;
    // Multi-start count for the null fit; unset means the study default.
    std::optional<int> restarts;
    Sided sided = Sided::two;
    // Test hook: generate responses without noise.
    bool zero_noise = false;

    void validate() const;
};

struct SimResult {
    double rejection_rate = 0.0;
    double mc_standard_error = 0.0;
    int reps_completed = 0;
    // Replications that threw a numeric error; excluded from the rate.
    int failures = 0;
    // Completed replications in which some fit hit its iteration budget.
    int nonconverged = 0;
    double mean_statistic = 0.0;
    double sd_statistic = 0.0;
    // Statistics of completed replications in replication order.
    std::vector<double> statistics;
};

struct Scenario {
    Dataset data;
    ParametricModel model;
    Vector theta_null;  // parameter of the null mean used to generate data
};

Matrix covariance_matrix(CovarianceKind kind, Eigen::Index q);
Matrix sample_predictors(Eigen::Index n, const Matrix& sigma, Rng& rng);

// Direction vectors of the study designs, each of length q.
Vector direction_all(Eigen::Index q);                     // 1/sqrt(q) everywhere
Vector direction_leading(Eigen::Index q, Eigen::Index m);  // first floor(m/2) entries
Vector direction_trailing(Eigen::Index q);                 // last floor(q/2) entries

// Null model fitted in a study (p filled in where the study derives it).
ModelSpec null_model_spec(const StudyConfig& cfg);
int default_restarts(Study study);

Scenario generate_scenario(const StudyConfig& cfg, Rng& rng);

// Generator for replication `rep`, a pure function of (seed, rep).
Rng replication_stream(std::uint64_t seed, std::uint64_t rep);

// threads = 0 uses the hardware concurrency. The result does not depend on it.
SimResult run_study(const StudyConfig& cfg, unsigned threads = 0);

using RowCallback = std::function<void(std::size_t index, const StudyConfig&, const SimResult&)>;
std::vector<SimResult> run_grid(const std::vector<StudyConfig>& configs, unsigned threads = 0,
                                const RowCallback& on_row = {});

// Kolmogorov-Smirnov distance between the empirical law of xs and N(0, 1).
double ks_distance_to_normal(std::vector<double> xs);

}  // namespace cost
