#include "cost/engine.hpp"

#include "cost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace cost {

std::string_view to_string(SplitMode mode) {
    return mode == SplitMode::as_ordered ? "as_ordered" : "seeded_shuffle";
}

SplitMode parse_split_mode(std::string_view name) {
    if (name == "seeded_shuffle") return SplitMode::seeded_shuffle;
    if (name == "as_ordered") return SplitMode::as_ordered;
    throw ConfigError("unknown split mode '" + std::string(name) + "'");
}

std::string_view to_string(Sided sided) { return sided == Sided::one ? "one" : "two"; }

Sided parse_sided(std::string_view name) {
    if (name == "one") return Sided::one;
    if (name == "two") return Sided::two;
    throw ConfigError("unknown sidedness '" + std::string(name) + "' (expected one or two)");
}

void SplitOptions::validate() const {
    if (!(fraction_n2 > 0.0 && fraction_n2 < 1.0)) {
        throw ConfigError("split.fraction_n2 must lie in (0, 1)");
    }
}

// -------------------------------------------------------------------------
// Splitting
// -------------------------------------------------------------------------

SampleSplit split_sample(const Dataset& data, const SplitOptions& opts, Eigen::Index min_part_size) {
    opts.validate();
    const Eigen::Index n = data.n();
    if (n < 4) {
        throw UnderdeterminedError("sample splitting needs n >= 4, got " + std::to_string(n));
    }
    const auto n2 = static_cast<Eigen::Index>(std::llround(opts.fraction_n2 * static_cast<double>(n)));
    const Eigen::Index n1 = n - n2;
    const Eigen::Index floor_size = std::max<Eigen::Index>(2, min_part_size);
    if (n1 < floor_size || n2 < floor_size) {
        throw UnderdeterminedError("split of n=" + std::to_string(n) + " into " + std::to_string(n1) +
                                   " + " + std::to_string(n2) + " leaves a part smaller than " +
                                   std::to_string(floor_size));
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    if (opts.mode == SplitMode::seeded_shuffle) {
        std::mt19937_64 rng(opts.seed);
        std::shuffle(order.begin(), order.end(), rng);
    }

    SplitPlan plan;
    plan.n1 = n1;
    plan.n2 = n2;
    plan.mode = opts.mode;
    plan.seed = opts.seed;
    plan.fraction_n2 = opts.fraction_n2;
    plan.first.assign(order.begin(), order.begin() + n1);
    plan.second.assign(order.begin() + n1, order.end());
    std::sort(plan.first.begin(), plan.first.end());
    std::sort(plan.second.begin(), plan.second.end());

    SampleSplit out{data.subset(plan.first), data.subset(plan.second), {}};
    out.plan = std::move(plan);
    return out;
}

// -------------------------------------------------------------------------
// Building blocks
// -------------------------------------------------------------------------

Matrix sigma_hat(const ParametricModel& model, const VectorRef& theta, const Dataset& data) {
    if (data.n() == 0) {
        throw ArgumentError("sigma_hat needs a nonempty dataset");
    }
    const Matrix jac = model.jacobian(theta, data.predictors());
    Matrix s = jac.transpose() * jac / static_cast<double>(data.n());
    // Exact symmetry regardless of how the product was blocked.
    return 0.5 * (s + s.transpose());
}

double numerator_stat(const VectorRef& e1, const VectorRef& e2, const Matrix& w) {
    if (w.rows() != e1.size() || w.cols() != e2.size()) {
        throw ArgumentError("numerator_stat: weight matrix shape does not match residuals");
    }
    const double scale = std::sqrt(static_cast<double>(e1.size()) * static_cast<double>(e2.size()));
    return e1.dot(w * e2) / scale;
}

namespace {


double condition_number(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return hi / lo;
}

// Ridge to add to sigma so its condition number stays below kMaxSigmaCondition.
double required_ridge(const Matrix& sigma) {
    const Eigen::Index p = sigma.rows();
    if (condition_number(sigma) <= kMaxSigmaCondition) {
        return 0.0;
    }
    const double unit = sigma.trace() / static_cast<double>(p);
    if (!(unit > 0.0)) {
        throw SingularMatrixError("gradient Gram matrix is zero");
    }
    for (double r = kRidgeStart; r <= kRidgeMax * (1.0 + 1e-9); r *= 10.0) {
        Matrix shifted = sigma;
        shifted.diagonal().array() += r * unit;
        if (condition_number(shifted) <= kMaxSigmaCondition) {
            return r * unit;
        }
    }
    throw SingularMatrixError("gradient Gram matrix stays singular after ridge escalation");
}

// Orthonormal factor Q of [G / sqrt(n); sqrt(ridge) I], restricted to the rows of G.
// For rows i, k of G: g_i^T (sigma + ridge I)^{-1} g_k = n q_i^T q_k.
Matrix gradient_basis(const Matrix& g, double ridge) {
    const Eigen::Index n = g.rows();
    const Eigen::Index p = g.cols();
    Matrix stacked = Matrix::Zero(n + p, p);
    stacked.topRows(n) = g / std::sqrt(static_cast<double>(n));
    stacked.bottomRows(p).diagonal().setConstant(std::sqrt(ridge));
    Eigen::HouseholderQR<Matrix> qr(stacked);
    const Matrix q = qr.householderQ() * Matrix::Identity(n + p, p);
    return q.topRows(n);
}

void fill_p_values(TestResult& r) {
    r.p_value_two_sided = p_value(r.statistic, Sided::two);
    r.p_value_one_sided = p_value(r.statistic, Sided::one);
}

}  // namespace

// -------------------------------------------------------------------------
// Statistic
// -------------------------------------------------------------------------

TestResult cost_statistic(const ParametricModel& model, const Dataset& data, const WeightSpec& weight,
                          const SplitOptions& split_opts, const FitOptions& fit_opts) {
    weight.validate();
    if (data.q() != model.q()) {
        throw ArgumentError(model.label() + ": dataset has q=" + std::to_string(data.q()));
    }
    SampleSplit split = split_sample(data, split_opts, model.p());
    const Eigen::Index n1 = split.plan.n1;
    const Eigen::Index n2 = split.plan.n2;

    const FitResult fit1 = fit(model, split.first, fit_opts);
    const FitResult fit2 = fit(model, split.second, fit_opts);
    const FitResult fit_all = fit(model, data, fit_opts);

    const Vector e1 = residual_vector(model, fit1.theta_hat, split.first);
    const Vector e2 = residual_vector(model, fit2.theta_hat, split.second);

    const double h = bandwidth(weight.c, data.n());
    const Matrix w = weight_matrix(weight, split.first.predictors(), split.second.predictors(), h);
    const double numerator = numerator_stat(e1, e2, w);

    // Projection of w_ij onto the gradient at X_i, all at the full-data fit.
    // g_i^T sigma^{-1} a_j is formed through an orthonormal basis of the
    // gradients rather than an explicit inverse, so it stays accurate when
    // sigma is badly conditioned.
    const Matrix g = model.jacobian(fit_all.theta_hat, data.predictors());
    const Matrix sigma = g.transpose() * g / static_cast<double>(data.n());
    const double ridge = required_ridge(0.5 * (sigma + sigma.transpose()));
    const Matrix basis = gradient_basis(g, ridge);
    Matrix q1(n1, g.cols());
    for (Eigen::Index i = 0; i < n1; ++i) {
        q1.row(i) = basis.row(split.plan.first[static_cast<std::size_t>(i)]);
    }
    const double lift = static_cast<double>(data.n()) / static_cast<double>(n1);
    const Matrix projected = w - lift * q1 * (q1.transpose() * w);
    const Vector w_tilde = projected * e2 / std::sqrt(static_cast<double>(n2));

    const Vector u = e1.cwiseProduct(w_tilde);
    const double centre = u.mean();
    const double sd = std::sqrt((u.array() - centre).square().sum() / static_cast<double>(n1));
    if (!(sd >= kDegenerateSd)) {
        throw DegenerateVarianceError("conditional standard deviation " + std::to_string(sd) +
                                      " is below 1e-12");
    }

    TestResult r;
    r.numerator = numerator;
    r.conditional_sd = sd;
    r.statistic = numerator / sd;
    fill_p_values(r);
    r.theta_hat_1 = fit1.theta_hat;
    r.theta_hat_2 = fit2.theta_hat;
    r.theta_hat_full = fit_all.theta_hat;
    r.converged_1 = fit1.converged;
    r.converged_2 = fit2.converged;
    r.converged_full = fit_all.converged;
    r.split = std::move(split.plan);
    r.bandwidth_used = h;
    r.sigma_ridge = ridge;
    return r;
}

double un_statistic(const ParametricModel& model, const Dataset& data, const WeightSpec& weight,
                    const FitOptions& fit_opts) {
    weight.validate();
    const Eigen::Index n = data.n();
    if (n < 2) {
        throw ArgumentError("un_statistic needs n >= 2");
    }
    const FitResult full = fit(model, data, fit_opts);
    const Vector e = residual_vector(model, full.theta_hat, data);
    const double h = bandwidth(weight.c, n);
    Matrix w = weight_matrix(weight, data.predictors(), data.predictors(), h);
    w.diagonal().setZero();
    return e.dot(w * e) / std::sqrt(static_cast<double>(n) * static_cast<double>(n - 1));
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double p_value(double statistic, Sided sided) {
    if (!std::isfinite(statistic)) {
        throw ArgumentError("p_value needs a finite statistic");
    }
    if (sided == Sided::two) {
        return std::min(1.0, std::erfc(std::abs(statistic) / std::numbers::sqrt2));
    }
    return 0.5 * std::erfc(statistic / std::numbers::sqrt2);
}

}  // namespace cost
