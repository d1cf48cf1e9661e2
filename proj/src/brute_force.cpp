// Loop-by-loop evaluation of the studentised statistic. Deliberately shares no
// matrix code with engine.cpp so the two can be compared.

#include "cost/engine.hpp"

#include "cost/errors.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace cost {

namespace {

using Table = std::vector<std::vector<double>>;

Table zeros(std::size_t rows, std::size_t cols) { return Table(rows, std::vector<double>(cols, 0.0)); }

// Cyclic Jacobi sweeps; returns the eigenvalues of a symmetric matrix.
std::vector<double> jacobi_eigenvalues(Table a) {
    const std::size_t p = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-300) break;
        for (std::size_t k = 0; k < p; ++k) {
            for (std::size_t l = k + 1; l < p; ++l) {
                if (a[k][l] == 0.0) continue;
                const double theta = (a[l][l] - a[k][k]) / (2.0 * a[k][l]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t m = 0; m < p; ++m) {
                    const double akm = a[k][m];
                    const double alm = a[l][m];
                    a[k][m] = c * akm - s * alm;
                    a[l][m] = s * akm + c * alm;
                }
                for (std::size_t m = 0; m < p; ++m) {
                    const double amk = a[m][k];
                    const double aml = a[m][l];
                    a[m][k] = c * amk - s * aml;
                    a[m][l] = s * amk + c * aml;
                }
            }
        }
    }
    std::vector<double> ev(p);
    for (std::size_t i = 0; i < p; ++i) ev[i] = a[i][i];
    return ev;
}

double condition(const Table& a) {
    const auto ev = jacobi_eigenvalues(a);
    double lo = ev[0];
    double hi = ev[0];
    for (double v : ev) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// Gauss-Jordan elimination with partial pivoting.
Table invert(Table a) {
    const std::size_t p = a.size();
    Table inv = zeros(p, p);
    for (std::size_t i = 0; i < p; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0) throw SingularMatrixError("oracle: singular Gram matrix");
        std::swap(a[pivot], a[col]);
        std::swap(inv[pivot], inv[col]);
        const double d = a[col][col];
        for (std::size_t m = 0; m < p; ++m) {
            a[col][m] /= d;
            inv[col][m] /= d;
        }
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            for (std::size_t m = 0; m < p; ++m) {
                a[r][m] -= f * a[col][m];
                inv[r][m] -= f * inv[col][m];
            }
        }
    }
    return inv;
}

std::vector<double> gradient_at(const ParametricModel& model, const Vector& theta, const Dataset& d,
                                Eigen::Index i) {
    const Vector g = model.gradient(theta, d.row(i));
    return std::vector<double>(g.data(), g.data() + g.size());
}

}  // namespace

TestResult brute_force_statistic(const ParametricModel& model, const Dataset& data,
                                 const WeightSpec& weight, const SplitOptions& split_opts,
                                 const FitOptions& fit_opts) {
    weight.validate();
    if (data.n() > 500) {
        throw ArgumentError("brute_force_statistic is limited to n <= 500");
    }
    if (data.q() != model.q()) {
        throw ArgumentError(model.label() + ": dataset has q=" + std::to_string(data.q()));
    }
    SampleSplit split = split_sample(data, split_opts, model.p());
    const Dataset& d1 = split.first;
    const Dataset& d2 = split.second;
    const auto n1 = static_cast<std::size_t>(split.plan.n1);
    const auto n2 = static_cast<std::size_t>(split.plan.n2);
    const auto n = static_cast<std::size_t>(data.n());
    const auto p = static_cast<std::size_t>(model.p());

    const FitResult fit1 = fit(model, d1, fit_opts);
    const FitResult fit2 = fit(model, d2, fit_opts);
    const FitResult fit_all = fit(model, data, fit_opts);

    std::vector<double> e1(n1);
    std::vector<double> e2(n2);
    for (std::size_t i = 0; i < n1; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        e1[i] = d1.responses()(ii) - model.mean(fit1.theta_hat, d1.row(ii));
    }
    for (std::size_t j = 0; j < n2; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        e2[j] = d2.responses()(jj) - model.mean(fit2.theta_hat, d2.row(jj));
    }

    const double h = weight.c * std::pow(static_cast<double>(n), -0.2);
    Table w = zeros(n1, n2);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            w[i][j] = eval_weight(weight, d1.row(static_cast<Eigen::Index>(i)),
                                  d2.row(static_cast<Eigen::Index>(j)), h);

    double double_sum = 0.0;
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) double_sum += e1[i] * e2[j] * w[i][j];
    const double numerator = double_sum / std::sqrt(static_cast<double>(n1 * n2));

    // Gram matrix of gradients over all n rows at the full-data estimate.
    Table sigma = zeros(p, p);
    for (std::size_t k = 0; k < n; ++k) {
        const auto g = gradient_at(model, fit_all.theta_hat, data, static_cast<Eigen::Index>(k));
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) sigma[a][b] += g[a] * g[b] / static_cast<double>(n);
    }
    double ridge = 0.0;
    if (condition(sigma) > kMaxSigmaCondition) {
        double trace = 0.0;
        for (std::size_t a = 0; a < p; ++a) trace += sigma[a][a];
        const double unit = trace / static_cast<double>(p);
        if (!(unit > 0.0)) throw SingularMatrixError("oracle: zero Gram matrix");
        bool ok = false;
        for (double r = kRidgeStart; r <= kRidgeMax * (1.0 + 1e-9); r *= 10.0) {
            Table shifted = sigma;
            for (std::size_t a = 0; a < p; ++a) shifted[a][a] += r * unit;
            if (condition(shifted) <= kMaxSigmaCondition) {
                ridge = r * unit;
                ok = true;
                break;
            }
        }
        if (!ok) throw SingularMatrixError("oracle: Gram matrix singular after ridge escalation");
        for (std::size_t a = 0; a < p; ++a) sigma[a][a] += ridge;
    }
    const Table sigma_inv = invert(sigma);

    std::vector<std::vector<double>> grads1(n1);
    for (std::size_t i = 0; i < n1; ++i)
        grads1[i] = gradient_at(model, fit_all.theta_hat, d1, static_cast<Eigen::Index>(i));

    // a_j = (1/n1) sum_i grad_i w_ij, then c_j = Sigma^{-1} a_j.
    Table c = zeros(n2, p);
    for (std::size_t j = 0; j < n2; ++j) {
        std::vector<double> a_j(p, 0.0);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t k = 0; k < p; ++k) a_j[k] += grads1[i][k] * w[i][j] / static_cast<double>(n1);
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t k = 0; k < p; ++k) c[j][r] += sigma_inv[r][k] * a_j[k];
    }

    std::vector<double> u(n1);
    for (std::size_t i = 0; i < n1; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n2; ++j) {
            double proj = 0.0;
            for (std::size_t k = 0; k < p; ++k) proj += grads1[i][k] * c[j][k];
            acc += e2[j] * (w[i][j] - proj);
        }
        u[i] = e1[i] * acc / std::sqrt(static_cast<double>(n2));
    }
    double mean_u = 0.0;
    for (double v : u) mean_u += v;
    mean_u /= static_cast<double>(n1);
    double var = 0.0;
    for (double v : u) var += (v - mean_u) * (v - mean_u);
    const double sd = std::sqrt(var / static_cast<double>(n1));
    if (!(sd >= kDegenerateSd)) {
        throw DegenerateVarianceError("oracle: conditional standard deviation below 1e-12");
    }

    TestResult r;
    r.numerator = numerator;
    r.conditional_sd = sd;
    r.statistic = numerator / sd;
    r.p_value_two_sided = p_value(r.statistic, Sided::two);
    r.p_value_one_sided = p_value(r.statistic, Sided::one);
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

}  // namespace cost
