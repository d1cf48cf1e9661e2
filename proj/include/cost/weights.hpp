#pragma once

#include "cost/model.hpp"

#include <string_view>

namespace cost {

enum class WeightKind { inverse_sqrt, gaussian, kernel_sum, hybrid };

std::string_view to_string(WeightKind kind);
WeightKind parse_weight_kind(std::string_view name);

struct WeightSpec {
    WeightKind kind = WeightKind::hybrid;
    double c = 1.0;  // bandwidth constant in h = c * n^{-0.2}
    // Divide the coordinate kernel sum by q so its moments stay bounded in q.
    bool normalize_by_q = true;
    // Overall multiplier; the studentised statistic does not depend on it.
    double scale = 1.0;

    void validate() const;
};

double bandwidth(double c, long long n);

// W_n(xi, xj). kernel_sum uses the standard Gaussian density per coordinate,
// without the classical 1/h^q factor.
double eval_weight(const WeightSpec& spec, const VectorRef& xi, const VectorRef& xj, double h);

// Entry (i, j) is eval_weight(row i of a, row j of b).
Matrix weight_matrix(const WeightSpec& spec, const Matrix& a, const Matrix& b, double h);

}  // namespace cost
