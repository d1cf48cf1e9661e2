#include "cost/weights.hpp"

#include "cost/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cost {

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

double squared_distance(const VectorRef& xi, const VectorRef& xj) {
    return (xi - xj).squaredNorm();
}

double kernel_sum(const VectorRef& xi, const VectorRef& xj, double h, bool normalize) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < xi.size(); ++k) {
        const double u = (xi(k) - xj(k)) / h;
        s += kInvSqrt2Pi * std::exp(-0.5 * u * u) / h;
    }
    return normalize ? s / static_cast<double>(xi.size()) : s;
}

}  // namespace

std::string_view to_string(WeightKind kind) {
    switch (kind) {
        case WeightKind::inverse_sqrt: return "inverse_sqrt";
        case WeightKind::gaussian: return "gaussian";
        case WeightKind::kernel_sum: return "kernel_sum";
        case WeightKind::hybrid: return "hybrid";
    }
    return "unknown";
}

WeightKind parse_weight_kind(std::string_view name) {
    for (WeightKind k : {WeightKind::inverse_sqrt, WeightKind::gaussian, WeightKind::kernel_sum,
                         WeightKind::hybrid}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ConfigError("unknown weight kind '" + std::string(name) + "'");
}

void WeightSpec::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("weight.c must be > 0");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("weight scale must be > 0");
}

double bandwidth(double c, long long n) {
    if (!(c > 0.0)) throw ArgumentError("bandwidth constant must be > 0");
    if (n < 1) throw ArgumentError("bandwidth needs n >= 1");
    return c * std::pow(static_cast<double>(n), -0.2);
}

double eval_weight(const WeightSpec& spec, const VectorRef& xi, const VectorRef& xj, double h) {
    if (xi.size() != xj.size()) {
        throw ArgumentError("weight arguments differ in length");
    }
    if (!(h > 0.0)) {
        throw ArgumentError("bandwidth must be > 0");
    }
    double w = 0.0;
    switch (spec.kind) {
        case WeightKind::inverse_sqrt:
            w = 1.0 / std::sqrt(squared_distance(xi, xj) + 1.0);
            break;
        case WeightKind::gaussian:
            w = std::exp(-0.5 * squared_distance(xi, xj));
            break;
        case WeightKind::kernel_sum:
            w = kernel_sum(xi, xj, h, spec.normalize_by_q);
            break;
        case WeightKind::hybrid:
            w = 0.5 * (1.0 / std::sqrt(squared_distance(xi, xj) + 1.0) +
                       kernel_sum(xi, xj, h, spec.normalize_by_q));
            break;
    }
    return spec.scale * w;
}

Matrix weight_matrix(const WeightSpec& spec, const Matrix& a, const Matrix& b, double h) {
    if (a.cols() != b.cols()) {
        throw ArgumentError("weight_matrix: column counts differ");
    }
    // Column-major copies so each observation is a contiguous column.
    const Matrix at = a.transpose();
    const Matrix bt = b.transpose();
    Matrix w(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            w(i, j) = eval_weight(spec, at.col(i), bt.col(j), h);
        }
    }
    return w;
}

}  // namespace cost
