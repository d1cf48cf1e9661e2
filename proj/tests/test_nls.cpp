#include "cost/errors.hpp"
#include "cost/nls.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace cost;

namespace {

ParametricModel exp_model() {
    return ParametricModel(
        "exp", 1, 1,
        [](const VectorRef& t, const VectorRef& x) { return std::exp(t(0) * x(0)); },
        [](const VectorRef& t, const VectorRef& x) {
            Vector g(1);
            g(0) = x(0) * std::exp(t(0) * x(0));
            return g;
        });
}

double sum_of_squares(const ParametricModel& m, const Dataset& d, double theta) {
    Vector t(1);
    t(0) = theta;
    return residual_vector(m, t, d).squaredNorm();
}

// Coarse grid, then a finer grid around the best coarse point.
double grid_search(const ParametricModel& m, const Dataset& d) {
    double best = -3.0;
    double best_loss = sum_of_squares(m, d, best);
    for (int k = 0; k <= 60000; ++k) {
        const double t = -3.0 + 1e-4 * k;
        const double loss = sum_of_squares(m, d, t);
        if (loss < best_loss) {
            best_loss = loss;
            best = t;
        }
    }
    const double centre = best;
    for (int k = -1000; k <= 1000; ++k) {
        const double t = centre + 1e-7 * k;
        const double loss = sum_of_squares(m, d, t);
        if (loss < best_loss) {
            best_loss = loss;
            best = t;
        }
    }
    return best;
}

}  // namespace

TEST(FitTest, LinearMatchesNormalEquations) {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index q = 1 + trial % 5;
        const auto m = make_model({ModelFamily::linear, q, {}, {}});
        const Vector theta0 = fixtures::uniform_vector(q, -2, 2, rng);
        const Dataset d = fixtures::simulate(m, theta0, 40 + 7 * trial, 0.5, rng);
        const Matrix& x = d.predictors();
        const Vector oracle = (x.transpose() * x).ldlt().solve(x.transpose() * d.responses());

        const FitResult r = fit(m, d);
        EXPECT_TRUE(r.converged);
        EXPECT_LE((r.theta_hat - oracle).lpNorm<Eigen::Infinity>(), 1e-8);
    }
}

TEST(FitTest, LinearStepIsExactWithoutDamping) {
    std::mt19937_64 rng(7);
    const auto m = make_model({ModelFamily::linear, 3, {}, {}});
    const Dataset d = fixtures::simulate(m, fixtures::uniform_vector(3, -1, 1, rng), 30, 1.0, rng);
    const Matrix& x = d.predictors();
    const Vector oracle = (x.transpose() * x).ldlt().solve(x.transpose() * d.responses());

    FitOptions opts;
    opts.damping_initial = 1e-14;
    opts.max_iterations = 1;
    opts.initial_point = Vector::Constant(3, 5.0);
    const FitResult r = fit(m, d, opts);
    EXPECT_EQ(r.loss_history.size(), 2u);
    EXPECT_LE((r.theta_hat - oracle).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(FitTest, ZeroNoiseSineReachesZeroLoss) {
    std::mt19937_64 rng(5);
    const auto m = make_model({ModelFamily::sine_coordinates, 3, {}, {}});
    Vector theta0(3);
    theta0 << 0.8, -0.4, 0.3;
    const Dataset d = fixtures::simulate(m, theta0, 60, 0.0, rng);
    const FitResult r = fit(m, d);
    EXPECT_LE(r.final_loss, 1e-12);
    EXPECT_LE((r.theta_hat - theta0).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(FitTest, OneParameterMatchesGridSearch) {
    std::mt19937_64 rng(2718);
    const auto m = exp_model();
    for (double truth : {-1.2, 0.4, 0.9}) {
        Vector theta0(1);
        theta0(0) = truth;
        const Dataset d = fixtures::simulate(m, theta0, 30, 0.3, rng);
        const double oracle = grid_search(m, d);
        const FitResult r = fit(m, d);
        EXPECT_NEAR(r.theta_hat(0), oracle, 2e-4) << "truth " << truth;
    }
}

TEST(FitTest, AcceptedLossesNeverIncrease) {
    std::mt19937_64 rng(9);
    const auto m = make_model({ModelFamily::linear_plus_exp_index, 2, {}, {}});
    Vector theta0(4);
    theta0 << 1.0, -0.5, 0.3, 0.2;
    const Dataset d = fixtures::simulate(m, theta0, 80, 0.2, rng);
    const FitResult r = fit(m, d);
    ASSERT_GE(r.loss_history.size(), 2u);
    for (std::size_t i = 1; i < r.loss_history.size(); ++i)
        EXPECT_LE(r.loss_history[i], r.loss_history[i - 1]);
    EXPECT_DOUBLE_EQ(r.loss_history.back(), r.final_loss);
}

TEST(FitTest, RowPermutationDoesNotChangeEstimate) {
    std::mt19937_64 rng(17);
    const auto m = make_model({ModelFamily::pairwise_interaction, 4, {}, {}});
    Vector theta0(3);
    theta0 << 0.5, -1.0, 2.0;
    const Dataset d = fixtures::simulate(m, theta0, 50, 0.4, rng);
    std::vector<Eigen::Index> order(50);
    for (Eigen::Index i = 0; i < 50; ++i) order[static_cast<std::size_t>(i)] = 49 - i;
    const FitResult a = fit(m, d);
    const FitResult b = fit(m, d.subset(order));
    EXPECT_LE((a.theta_hat - b.theta_hat).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(FitTest, RestartsEscapeFlatStart) {
    // cos(t2 x2) has zero derivative in t2 at the origin.
    std::mt19937_64 rng(23);
    const auto m = make_model({ModelFamily::single_index_cosine, 2, {}, {}});
    Vector theta0(2);
    theta0 << 1.0, 2.0;
    const Dataset d = fixtures::simulate(m, theta0, 200, 0.1, rng);
    FitOptions opts;
    opts.restarts = 5;
    const FitResult r = fit(m, d, opts);
    EXPECT_NEAR(r.theta_hat(0), 1.0, 0.05);
    EXPECT_NEAR(std::abs(r.theta_hat(1)), 2.0, 0.05);
}

TEST(FitTest, Errors) {
    const auto m = make_model({ModelFamily::linear, 3, {}, {}});
    Dataset small(Matrix::Ones(2, 3), Vector::Ones(2));
    EXPECT_THROW(fit(m, small), UnderdeterminedError);

    const auto e = exp_model();
    Matrix x(3, 1);
    x << 1, 2, 3;
    Dataset d(x, Vector::Ones(3));
    FitOptions opts;
    opts.initial_point = Vector::Constant(1, 800.0);
    EXPECT_THROW(fit(e, d, opts), NumericError);

    FitOptions bad;
    bad.max_iterations = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
}
