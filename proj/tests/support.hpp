#pragma once

#include "cost/model.hpp"

#include <cstdint>
#include <random>

namespace cost::fixtures {

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
    return m;
}

inline Vector uniform_vector(Eigen::Index size, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = u(rng);
    return v;
}

// Central differences of the mean with respect to theta.
inline Vector finite_difference_gradient(const ParametricModel& model, const Vector& theta,
                                         const Vector& x) {
    Vector g(theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        const double step = 1e-6 * std::max(1.0, std::abs(theta(k)));
        Vector up = theta;
        Vector down = theta;
        up(k) += step;
        down(k) -= step;
        g(k) = (model.mean(up, x) - model.mean(down, x)) / (2.0 * step);
    }
    return g;
}

// Data drawn from model at theta0 with N(0, noise^2) errors and N(0, 1) predictors.
inline Dataset simulate(const ParametricModel& model, const Vector& theta0, Eigen::Index n,
                        double noise, std::mt19937_64& rng) {
    Matrix x = gaussian_matrix(n, model.q(), rng);
    std::normal_distribution<double> z(0.0, 1.0);
    Vector y = model.predict(theta0, x);
    for (Eigen::Index i = 0; i < n; ++i) y(i) += noise * z(rng);
    return Dataset(std::move(x), std::move(y));
}

}  // namespace cost::fixtures
