#include "cost/model.hpp"

#include "cost/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace cost {

// -------------------------------------------------------------------------
// Dataset
// -------------------------------------------------------------------------

Dataset::Dataset(Matrix predictors, Vector responses)
    : predictors_(std::move(predictors)), responses_(std::move(responses)) {
    if (predictors_.rows() != responses_.size()) {
        std::ostringstream msg;
        msg << "dataset has " << predictors_.rows() << " predictor rows but "
            << responses_.size() << " responses";
        throw ArgumentError(msg.str());
    }
    if (!predictors_.allFinite() || !responses_.allFinite()) {
        throw DataError("dataset contains non-finite values");
    }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& indices) const {
    const auto m = static_cast<Eigen::Index>(indices.size());
    Matrix x(m, q());
    Vector y(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index i = indices[static_cast<std::size_t>(k)];
        if (i < 0 || i >= n()) {
            throw ArgumentError("subset index out of range");
        }
        x.row(k) = predictors_.row(i);
        y(k) = responses_(i);
    }
    return Dataset(std::move(x), std::move(y));
}

// -------------------------------------------------------------------------
// ParametricModel
// -------------------------------------------------------------------------

ParametricModel::ParametricModel(std::string label, Eigen::Index p, Eigen::Index q, MeanFn mean,
                                 GradientFn gradient)
    : label_(std::move(label)), p_(p), q_(q), mean_(std::move(mean)), gradient_(std::move(gradient)) {
    if (p_ < 1 || q_ < 1) {
        throw ConfigError("model dimensions must be positive");
    }
}

void ParametricModel::check_dims(const VectorRef& theta, const VectorRef& x) const {
    if (theta.size() != p_ || x.size() != q_) {
        std::ostringstream msg;
        msg << label_ << ": expected theta of length " << p_ << " and x of length " << q_
            << ", got " << theta.size() << " and " << x.size();
        throw ArgumentError(msg.str());
    }
}

double ParametricModel::mean(const VectorRef& theta, const VectorRef& x) const {
    check_dims(theta, x);
    return mean_(theta, x);
}

Vector ParametricModel::gradient(const VectorRef& theta, const VectorRef& x) const {
    check_dims(theta, x);
    return gradient_(theta, x);
}

Vector ParametricModel::predict(const VectorRef& theta, const Matrix& predictors) const {
    if (predictors.cols() != q_) {
        throw ArgumentError(label_ + ": predictor column count does not match model q");
    }
    Vector out(predictors.rows());
    for (Eigen::Index i = 0; i < predictors.rows(); ++i) {
        const Vector x = predictors.row(i).transpose();
        out(i) = mean(theta, x);
    }
    return out;
}

Matrix ParametricModel::jacobian(const VectorRef& theta, const Matrix& predictors) const {
    if (predictors.cols() != q_) {
        throw ArgumentError(label_ + ": predictor column count does not match model q");
    }
    Matrix out(predictors.rows(), p_);
    for (Eigen::Index i = 0; i < predictors.rows(); ++i) {
        const Vector x = predictors.row(i).transpose();
        out.row(i) = gradient(theta, x).transpose();
    }
    return out;
}

// -------------------------------------------------------------------------
// Families
// -------------------------------------------------------------------------

namespace {

constexpr std::array<std::pair<ModelFamily, std::string_view>, 9> kFamilyNames{{
    {ModelFamily::linear, "linear"},
    {ModelFamily::single_index_cosine, "single_index_cosine"},
    {ModelFamily::linear_plus_exp_index, "linear_plus_exp_index"},
    {ModelFamily::sine_coordinates, "sine_coordinates"},
    {ModelFamily::pairwise_interaction, "pairwise_interaction"},
    {ModelFamily::triple_interaction_sine, "triple_interaction_sine"},
    {ModelFamily::block_product_sine, "block_product_sine"},
    {ModelFamily::block_sum_sine, "block_sum_sine"},
    {ModelFamily::fixed_direction_polynomial, "fixed_direction_polynomial"},
}};

std::string make_label(const ModelSpec& spec, Eigen::Index p) {
    std::ostringstream out;
    out << to_string(spec.family) << "(p=" << p << ",q=" << spec.q << ")";
    return out.str();
}

ParametricModel make_linear(const ModelSpec& spec, Eigen::Index p) {
    return ParametricModel(
        make_label(spec, p), p, spec.q,
        [](const VectorRef& theta, const VectorRef& x) { return theta.dot(x); },
        [](const VectorRef&, const VectorRef& x) { return Vector(x); });
}

ParametricModel make_single_index_cosine(const ModelSpec& spec, Eigen::Index p) {
    return ParametricModel(
        make_label(spec, p), p, spec.q,
        [](const VectorRef& theta, const VectorRef& x) {
            return theta(0) * x(0) + std::cos(theta(1) * x(1));
        },
        [](const VectorRef& theta, const VectorRef& x) {
            Vector g(2);
            g(0) = x(0);
            g(1) = -x(1) * std::sin(theta(1) * x(1));
            return g;
        });
}

ParametricModel make_linear_plus_exp_index(const ModelSpec& spec, Eigen::Index p) {
    const Eigen::Index q = spec.q;
    return ParametricModel(
        make_label(spec, p), p, q,
        [q](const VectorRef& theta, const VectorRef& x) {
            return theta.head(q).dot(x) + std::exp(theta.tail(q).dot(x));
        },
        [q](const VectorRef& theta, const VectorRef& x) {
            Vector g(2 * q);
            g.head(q) = x;
            g.tail(q) = x * std::exp(theta.tail(q).dot(x));
            return g;
        });
}

ParametricModel make_sine_coordinates(const ModelSpec& spec, Eigen::Index p) {
    return ParametricModel(
        make_label(spec, p), p, spec.q,
        [](const VectorRef& theta, const VectorRef& x) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                s += std::sin(theta(i) * x(i));
            }
            return s;
        },
        [](const VectorRef& theta, const VectorRef& x) {
            Vector g(x.size());
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                g(i) = x(i) * std::cos(theta(i) * x(i));
            }
            return g;
        });
}

ParametricModel make_pairwise_interaction(const ModelSpec& spec, Eigen::Index p) {
    return ParametricModel(
        make_label(spec, p), p, spec.q,
        [p](const VectorRef& theta, const VectorRef& x) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < p; ++i) {
                s += theta(i) * x(i) * x(i + 1);
            }
            return s;
        },
        [p](const VectorRef&, const VectorRef& x) {
            Vector g(p);
            for (Eigen::Index i = 0; i < p; ++i) {
                g(i) = x(i) * x(i + 1);
            }
            return g;
        });
}

ParametricModel make_triple_interaction_sine(const ModelSpec& spec, Eigen::Index p) {
    return ParametricModel(
        make_label(spec, p), p, spec.q,
        [p](const VectorRef& theta, const VectorRef& x) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < p; ++i) {
                s += theta(i) * x(i) * x(i + 1) * std::sin(std::numbers::pi * x(i + 2));
            }
            return s;
        },
        [p](const VectorRef&, const VectorRef& x) {
            Vector g(p);
            for (Eigen::Index i = 0; i < p; ++i) {
                g(i) = x(i) * x(i + 1) * std::sin(std::numbers::pi * x(i + 2));
            }
            return g;
        });
}

ParametricModel make_block_product_sine(const ModelSpec& spec, Eigen::Index p) {
    const auto blocks = coordinate_blocks(spec.q, p);
    auto products = [blocks](const VectorRef& x) {
        Vector prod = Vector::Ones(static_cast<Eigen::Index>(blocks.size()));
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            for (Eigen::Index j = blocks[i].begin; j < blocks[i].end; ++j) {
                prod(static_cast<Eigen::Index>(i)) *= x(j);
            }
        }
        return prod;
    };
    return ParametricModel(
        make_label(spec, p), p, spec.q,
        [products](const VectorRef& theta, const VectorRef& x) {
            const Vector prod = products(x);
            double s = 0.0;
            for (Eigen::Index i = 0; i < prod.size(); ++i) {
                s += std::sin(theta(i) * prod(i));
            }
            return s;
        },
        [products](const VectorRef& theta, const VectorRef& x) {
            const Vector prod = products(x);
            Vector g(prod.size());
            for (Eigen::Index i = 0; i < prod.size(); ++i) {
                g(i) = prod(i) * std::cos(theta(i) * prod(i));
            }
            return g;
        });
}

// Block i contributes sin(theta_i * S_lead + S_rest) where S_lead sums the first
// floor(r/2) coordinates of the block and S_rest the remainder.
ParametricModel make_block_sum_sine(const ModelSpec& spec, Eigen::Index p) {
    const auto blocks = coordinate_blocks(spec.q, p);
    const Eigen::Index width = (spec.q + p - 1) / p;
    const Eigen::Index lead = width / 2;
    auto sums = [blocks, lead](const VectorRef& x) {
        const auto m = static_cast<Eigen::Index>(blocks.size());
        Eigen::Matrix<double, Eigen::Dynamic, 2> s = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(m, 2);
        for (Eigen::Index i = 0; i < m; ++i) {
            const Block& b = blocks[static_cast<std::size_t>(i)];
            for (Eigen::Index j = b.begin; j < b.end; ++j) {
                s(i, j < b.begin + lead ? 0 : 1) += x(j);
            }
        }
        return s;
    };
    return ParametricModel(
        make_label(spec, p), p, spec.q,
        [sums](const VectorRef& theta, const VectorRef& x) {
            const auto s = sums(x);
            double total = 0.0;
            for (Eigen::Index i = 0; i < s.rows(); ++i) {
                total += std::sin(theta(i) * s(i, 0) + s(i, 1));
            }
            return total;
        },
        [sums](const VectorRef& theta, const VectorRef& x) {
            const auto s = sums(x);
            Vector g(s.rows());
            for (Eigen::Index i = 0; i < s.rows(); ++i) {
                g(i) = s(i, 0) * std::cos(theta(i) * s(i, 0) + s(i, 1));
            }
            return g;
        });
}

ParametricModel make_fixed_direction_polynomial(const ModelSpec& spec, Eigen::Index p) {
    const Vector beta = *spec.direction;
    return ParametricModel(
        make_label(spec, p), p, spec.q,
        [beta](const VectorRef& theta, const VectorRef& x) {
            const double t = beta.dot(x);
            return theta(0) + theta(1) * t + theta(2) * t * t;
        },
        [beta](const VectorRef&, const VectorRef& x) {
            const double t = beta.dot(x);
            Vector g(3);
            g << 1.0, t, t * t;
            return g;
        });
}

[[noreturn]] void config_fail(const ModelSpec& spec, const std::string& why) {
    throw ConfigError(std::string(to_string(spec.family)) + ": " + why);
}

}  // namespace

std::string_view to_string(ModelFamily family) {
    for (const auto& [f, name] : kFamilyNames) {
        if (f == family) {
            return name;
        }
    }
    return "unknown";
}

ModelFamily parse_model_family(std::string_view name) {
    for (const auto& [f, n] : kFamilyNames) {
        if (n == name) {
            return f;
        }
    }
    throw ConfigError("unknown model family '" + std::string(name) + "'");
}

const std::vector<ModelFamily>& all_model_families() {
    static const std::vector<ModelFamily> families = [] {
        std::vector<ModelFamily> out;
        for (const auto& entry : kFamilyNames) {
            out.push_back(entry.first);
        }
        return out;
    }();
    return families;
}

std::vector<Block> coordinate_blocks(Eigen::Index q, Eigen::Index p) {
    if (q < 1 || p < 1) {
        throw ConfigError("block partition needs positive q and p");
    }
    const Eigen::Index width = (q + p - 1) / p;
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) {
        const Eigen::Index begin = std::min(i * width, q);
        const Eigen::Index end = std::min((i + 1) * width, q);
        blocks.push_back({begin, end});
    }
    return blocks;
}

Eigen::Index implied_parameter_count(const ModelSpec& spec) {
    const Eigen::Index q = spec.q;
    if (q < 1) {
        config_fail(spec, "q must be positive");
    }
    if (spec.direction && spec.family != ModelFamily::fixed_direction_polynomial) {
        config_fail(spec, "a direction vector is only accepted by fixed_direction_polynomial");
    }
    const bool block = spec.family == ModelFamily::block_product_sine ||
                       spec.family == ModelFamily::block_sum_sine;
    if (spec.p && !block) {
        // p is derived for every other family; an explicit value must agree.
        ModelSpec derived = spec;
        derived.p.reset();
        const Eigen::Index expected = implied_parameter_count(derived);
        if (*spec.p != expected) {
            config_fail(spec, "p=" + std::to_string(*spec.p) + " inconsistent with q=" +
                                  std::to_string(q) + " (expected " + std::to_string(expected) + ")");
        }
        return expected;
    }
    switch (spec.family) {
        case ModelFamily::linear:
        case ModelFamily::sine_coordinates:
            return q;
        case ModelFamily::single_index_cosine:
            if (q < 2) config_fail(spec, "requires q >= 2");
            return 2;
        case ModelFamily::linear_plus_exp_index:
            return 2 * q;
        case ModelFamily::pairwise_interaction:
            if (q < 2) config_fail(spec, "requires q >= 2");
            return q - 1;
        case ModelFamily::triple_interaction_sine:
            if (q < 3) config_fail(spec, "requires q >= 3");
            return q - 2;
        case ModelFamily::block_product_sine:
        case ModelFamily::block_sum_sine: {
            if (!spec.p) config_fail(spec, "requires an explicit p");
            const Eigen::Index p = *spec.p;
            if (p < 1 || p > q) config_fail(spec, "requires 1 <= p <= q");
            if (spec.family == ModelFamily::block_sum_sine && (q + p - 1) / p < 2) {
                config_fail(spec, "requires block width ceil(q/p) >= 2");
            }
            return p;
        }
        case ModelFamily::fixed_direction_polynomial:
            if (!spec.direction) config_fail(spec, "requires a direction vector");
            if (spec.direction->size() != q) {
                config_fail(spec, "direction has length " + std::to_string(spec.direction->size()) +
                                      ", expected q=" + std::to_string(q));
            }
            if (!spec.direction->allFinite()) config_fail(spec, "direction must be finite");
            return 3;
    }
    config_fail(spec, "unhandled family");
}

ParametricModel make_model(const ModelSpec& spec) {
    const Eigen::Index p = implied_parameter_count(spec);
    switch (spec.family) {
        case ModelFamily::linear: return make_linear(spec, p);
        case ModelFamily::single_index_cosine: return make_single_index_cosine(spec, p);
        case ModelFamily::linear_plus_exp_index: return make_linear_plus_exp_index(spec, p);
        case ModelFamily::sine_coordinates: return make_sine_coordinates(spec, p);
        case ModelFamily::pairwise_interaction: return make_pairwise_interaction(spec, p);
        case ModelFamily::triple_interaction_sine: return make_triple_interaction_sine(spec, p);
        case ModelFamily::block_product_sine: return make_block_product_sine(spec, p);
        case ModelFamily::block_sum_sine: return make_block_sum_sine(spec, p);
        case ModelFamily::fixed_direction_polynomial: return make_fixed_direction_polynomial(spec, p);
    }
    config_fail(spec, "unhandled family");
}

double eval_mean(const ParametricModel& model, const VectorRef& theta, const VectorRef& x) {
    return model.mean(theta, x);
}

Vector eval_gradient(const ParametricModel& model, const VectorRef& theta, const VectorRef& x) {
    return model.gradient(theta, x);
}

Vector residual_vector(const ParametricModel& model, const VectorRef& theta, const Dataset& data) {
    if (data.q() != model.q()) {
        throw ArgumentError(model.label() + ": dataset has q=" + std::to_string(data.q()));
    }
    return data.responses() - model.predict(theta, data.predictors());
}

}  // namespace cost
