#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cost {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// n observations of (X, Y): predictors is n x q, responses has length n.
class Dataset {
public:
    Dataset() = default;
    Dataset(Matrix predictors, Vector responses);

    Eigen::Index n() const { return responses_.size(); }
    Eigen::Index q() const { return predictors_.cols(); }

    const Matrix& predictors() const { return predictors_; }
    const Vector& responses() const { return responses_; }

    Vector row(Eigen::Index i) const { return predictors_.row(i).transpose(); }

    // Rows in the given order; indices must be in [0, n).
    Dataset subset(const std::vector<Eigen::Index>& indices) const;

private:
    Matrix predictors_;
    Vector responses_;
};

// A mean function g(theta, x) with its analytic gradient with respect to theta.
class ParametricModel {
public:
    using MeanFn = std::function<double(const VectorRef& theta, const VectorRef& x)>;
    using GradientFn = std::function<Vector(const VectorRef& theta, const VectorRef& x)>;

    ParametricModel(std::string label, Eigen::Index p, Eigen::Index q, MeanFn mean,
                    GradientFn gradient);

    Eigen::Index p() const { return p_; }
    Eigen::Index q() const { return q_; }
    const std::string& label() const { return label_; }

    double mean(const VectorRef& theta, const VectorRef& x) const;
    Vector gradient(const VectorRef& theta, const VectorRef& x) const;

    // Fitted values g(theta, X_i) for every row of data.
    Vector predict(const VectorRef& theta, const Matrix& predictors) const;
    // n x p matrix whose i-th row is the gradient at row i.
    Matrix jacobian(const VectorRef& theta, const Matrix& predictors) const;

private:
    void check_dims(const VectorRef& theta, const VectorRef& x) const;

    std::string label_;
    Eigen::Index p_;
    Eigen::Index q_;
    MeanFn mean_;
    GradientFn gradient_;
};

enum class ModelFamily {
    linear,
    single_index_cosine,
    linear_plus_exp_index,
    sine_coordinates,
    pairwise_interaction,
    triple_interaction_sine,
    block_product_sine,
    block_sum_sine,
    fixed_direction_polynomial,
};

std::string_view to_string(ModelFamily family);
ModelFamily parse_model_family(std::string_view name);
const std::vector<ModelFamily>& all_model_families();

struct ModelSpec {
    ModelFamily family = ModelFamily::linear;
    Eigen::Index q = 1;
    // Required by the block families, which cannot derive p from q.
    std::optional<Eigen::Index> p;
    // Required by fixed_direction_polynomial; length q.
    std::optional<Vector> direction;
};

// Parameter dimension implied by spec; throws ConfigError when inconsistent.
Eigen::Index implied_parameter_count(const ModelSpec& spec);

ParametricModel make_model(const ModelSpec& spec);

// Contiguous coordinate blocks of width ceil(q / p); the last block stops at q.
// Blocks past q are empty.
struct Block {
    Eigen::Index begin;
    Eigen::Index end;  // exclusive
};
std::vector<Block> coordinate_blocks(Eigen::Index q, Eigen::Index p);

double eval_mean(const ParametricModel& model, const VectorRef& theta, const VectorRef& x);
Vector eval_gradient(const ParametricModel& model, const VectorRef& theta, const VectorRef& x);

// Y_i - g(theta, X_i).
Vector residual_vector(const ParametricModel& model, const VectorRef& theta, const Dataset& data);

}  // namespace cost
