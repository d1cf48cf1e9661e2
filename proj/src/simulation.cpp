#include "cost/simulation.hpp"

#include "cost/errors.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

namespace cost {

namespace {

constexpr std::array<std::pair<Study, std::string_view>, 10> kStudyNames{{
    {Study::H11, "H11"}, {Study::H12, "H12"}, {Study::H21, "H21"}, {Study::H22, "H22"},
    {Study::H31, "H31"}, {Study::H32, "H32"}, {Study::H33, "H33"}, {Study::H34, "H34"},
    {Study::H41, "H41"}, {Study::H42, "H42"},
}};

constexpr double kMaxFailureFraction = 0.2;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool is_block_study(Study s) { return s == Study::H41 || s == Study::H42; }

double sum_exp3(const VectorRef& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::exp(3.0 * x(i));
    return s;
}

struct RepOutcome {
    bool completed = false;
    bool converged = true;
    bool rejected = false;
    double statistic = 0.0;
};

}  // namespace

std::string_view to_string(Study study) {
    for (const auto& [s, name] : kStudyNames) {
        if (s == study) return name;
    }
    return "unknown";
}

Study parse_study(std::string_view name) {
    for (const auto& [s, n] : kStudyNames) {
        if (n == name) return s;
    }
    throw ConfigError("study: unknown study id '" + std::string(name) + "'");
}

std::string_view to_string(CovarianceKind kind) {
    return kind == CovarianceKind::ar_half ? "ar_half" : "identity";
}

CovarianceKind parse_covariance_kind(std::string_view name) {
    if (name == "identity") return CovarianceKind::identity;
    if (name == "ar_half") return CovarianceKind::ar_half;
    throw ConfigError("sigma_kind: unknown covariance kind '" + std::string(name) + "'");
}

// -------------------------------------------------------------------------
// Designs
// -------------------------------------------------------------------------

Matrix covariance_matrix(CovarianceKind kind, Eigen::Index q) {
    if (q < 1) throw ArgumentError("covariance_matrix needs q >= 1");
    if (kind == CovarianceKind::identity) return Matrix::Identity(q, q);
    Matrix s(q, q);
    for (Eigen::Index i = 0; i < q; ++i)
        for (Eigen::Index j = 0; j < q; ++j) s(i, j) = std::pow(0.5, static_cast<double>(std::abs(i - j)));
    return s;
}

Matrix sample_predictors(Eigen::Index n, const Matrix& sigma, Rng& rng) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NumericError("predictor covariance is not positive definite");
    }
    const Matrix lower = llt.matrixL();
    const Eigen::Index q = sigma.rows();
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z(n, q);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < q; ++j) z(i, j) = normal(rng);
    return z * lower.transpose();
}

Vector direction_all(Eigen::Index q) {
    return Vector::Constant(q, 1.0 / std::sqrt(static_cast<double>(q)));
}

Vector direction_leading(Eigen::Index q, Eigen::Index m) {
    const Eigen::Index k = m / 2;
    if (k < 1 || k > q) throw ConfigError("leading direction needs 2 <= m and m/2 <= q");
    Vector v = Vector::Zero(q);
    v.head(k).setConstant(1.0 / std::sqrt(static_cast<double>(k)));
    return v;
}

Vector direction_trailing(Eigen::Index q) {
    const Eigen::Index k = q / 2;
    if (k < 1) throw ConfigError("trailing direction needs q >= 2");
    Vector v = Vector::Zero(q);
    v.tail(k).setConstant(1.0 / std::sqrt(static_cast<double>(k)));
    return v;
}

ModelSpec null_model_spec(const StudyConfig& cfg) {
    ModelSpec spec;
    spec.q = cfg.q;
    switch (cfg.study) {
        case Study::H11:
        case Study::H21: spec.family = ModelFamily::linear; break;
        case Study::H12:
        case Study::H31: spec.family = ModelFamily::single_index_cosine; break;
        case Study::H22: spec.family = ModelFamily::linear_plus_exp_index; break;
        case Study::H32: spec.family = ModelFamily::sine_coordinates; break;
        case Study::H33: spec.family = ModelFamily::pairwise_interaction; break;
        case Study::H34: spec.family = ModelFamily::triple_interaction_sine; break;
        case Study::H41: spec.family = ModelFamily::block_product_sine; break;
        case Study::H42: spec.family = ModelFamily::block_sum_sine; break;
    }
    spec.p = cfg.p;
    spec.p = implied_parameter_count(spec);
    return spec;
}

int default_restarts(Study study) {
    switch (study) {
        case Study::H12:
        case Study::H31: return 5;
        default: return 0;
    }
}

void StudyConfig::validate() const {
    if (n < 4) throw ConfigError("n must be >= 4");
    if (q < 1) throw ConfigError("q must be >= 1");
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("a must be a finite value >= 0");
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (is_block_study(study) && !p) throw ConfigError("p is required for " + std::string(to_string(study)));
    if (restarts && *restarts < 0) throw ConfigError("fit.restarts must be >= 0");
    if ((study == Study::H11 || study == Study::H22) && q < 2) {
        throw ConfigError(std::string(to_string(study)) + " requires q >= 2");
    }
    if (is_block_study(study) && *p < 2) {
        throw ConfigError(std::string(to_string(study)) + " requires p >= 2");
    }
    split.validate();
    weight.validate();
    fit.validate();
    // Surfaces inconsistent (study, q, p) combinations as configuration errors.
    null_model_spec(*this);
}

// -------------------------------------------------------------------------
// Scenario generation
// -------------------------------------------------------------------------

Scenario generate_scenario(const StudyConfig& cfg, Rng& rng) {
    cfg.validate();
    const Eigen::Index n = cfg.n;
    const Eigen::Index q = cfg.q;
    ModelSpec spec = null_model_spec(cfg);
    ParametricModel model = make_model(spec);
    const Eigen::Index p = model.p();

    Vector theta0;
    std::function<double(const VectorRef&)> departure;
    switch (cfg.study) {
        case Study::H11: {
            theta0 = direction_leading(q, q);
            const Vector b2 = direction_trailing(q);
            departure = [b2](const VectorRef& x) { const double t = b2.dot(x); return t * t; };
            break;
        }
        case Study::H12:
            theta0 = Vector{{1.0, 2.0}};
            departure = [](const VectorRef& x) { return std::exp(3.0 * x(1)); };
            break;
        case Study::H21: {
            theta0 = direction_all(q);
            const Vector b0 = theta0;
            departure = [b0](const VectorRef& x) { return std::exp(b0.dot(x)); };
            break;
        }
        case Study::H22: {
            theta0.resize(2 * q);
            theta0 << direction_leading(q, q), direction_trailing(q);
            const Vector b0 = direction_all(q);
            departure = [b0](const VectorRef& x) { return std::exp(-b0.dot(x)); };
            break;
        }
        case Study::H31:
            theta0 = Vector{{1.0, 2.0}};
            departure = sum_exp3;
            break;
        case Study::H32:
            theta0 = direction_all(q);
            departure = sum_exp3;
            break;
        case Study::H33: {
            theta0 = Vector::Ones(p);
            const Vector b0 = direction_all(q);
            departure = [b0](const VectorRef& x) { return std::cos(b0.dot(x)); };
            break;
        }
        case Study::H34: {
            theta0 = Vector::Ones(p);
            const Vector b0 = direction_all(q);
            departure = [b0](const VectorRef& x) { const double t = b0.dot(x); return t * t * t; };
            break;
        }
        case Study::H41:
        case Study::H42: {
            const Vector b1 = direction_leading(q, p);
            theta0 = b1.head(p);
            departure = [b1](const VectorRef& x) { const double t = b1.dot(x); return t * t; };
            break;
        }
    }

    Matrix x = sample_predictors(n, covariance_matrix(cfg.sigma_kind, q), rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector xi = x.row(i).transpose();
        double yi = model.mean(theta0, xi);
        if (cfg.a != 0.0) yi += cfg.a * departure(xi);
        if (!cfg.zero_noise) yi += normal(rng);
        y(i) = yi;
    }
    return Scenario{Dataset(std::move(x), std::move(y)), std::move(model), std::move(theta0)};
}

// -------------------------------------------------------------------------
// Monte Carlo driver
// -------------------------------------------------------------------------

Rng replication_stream(std::uint64_t seed, std::uint64_t rep) {
    const std::uint64_t key = splitmix64(seed);
    return Rng(splitmix64(key ^ splitmix64(rep + 0x632be59bd9b4e019ULL)));
}

namespace {

RepOutcome run_replication(const StudyConfig& cfg, std::uint64_t rep) {
    Rng rng = replication_stream(cfg.seed, rep);
    Scenario sc = generate_scenario(cfg, rng);
    SplitOptions split = cfg.split;
    split.seed = rng();
    FitOptions fit_opts = cfg.fit;
    fit_opts.restarts = cfg.restarts.value_or(default_restarts(cfg.study));
    fit_opts.restart_seed = rng();

    RepOutcome out;
    try {
        const TestResult r = cost_statistic(sc.model, sc.data, cfg.weight, split, fit_opts);
        out.completed = true;
        out.converged = r.all_converged();
        out.statistic = r.statistic;
        const double pv = cfg.sided == Sided::two ? r.p_value_two_sided : r.p_value_one_sided;
        out.rejected = pv < cfg.alpha;
    } catch (const NumericError&) {
        out.completed = false;
    }
    return out;
}

}  // namespace

SimResult run_study(const StudyConfig& cfg, unsigned threads) {
    cfg.validate();
    const auto reps = static_cast<std::size_t>(cfg.reps);
    std::vector<RepOutcome> outcomes(reps);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < reps; r = next++) {
            outcomes[r] = run_replication(cfg, r);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    SimResult res;
    int rejections = 0;
    for (const RepOutcome& o : outcomes) {
        if (!o.completed) {
            ++res.failures;
            continue;
        }
        ++res.reps_completed;
        res.nonconverged += o.converged ? 0 : 1;
        rejections += o.rejected ? 1 : 0;
        res.statistics.push_back(o.statistic);
    }
    if (static_cast<double>(res.failures) > kMaxFailureFraction * static_cast<double>(cfg.reps)) {
        throw HarnessError(std::string(to_string(cfg.study)) + ": " + std::to_string(res.failures) +
                           " of " + std::to_string(cfg.reps) + " replications failed");
    }
    if (res.reps_completed > 0) {
        const double m = static_cast<double>(res.reps_completed);
        res.rejection_rate = rejections / m;
        res.mc_standard_error = std::sqrt(res.rejection_rate * (1.0 - res.rejection_rate) / m);
        double sum = 0.0;
        for (double s : res.statistics) sum += s;
        res.mean_statistic = sum / m;
        double ss = 0.0;
        for (double s : res.statistics) ss += (s - res.mean_statistic) * (s - res.mean_statistic);
        res.sd_statistic = res.reps_completed > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
    }
    return res;
}

std::vector<SimResult> run_grid(const std::vector<StudyConfig>& configs, unsigned threads,
                                const RowCallback& on_row) {
    if (configs.empty()) throw ConfigError("simulation grid is empty");
    std::vector<SimResult> rows;
    rows.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        rows.push_back(run_study(configs[i], threads));
        if (on_row) on_row(i, configs[i], rows.back());
    }
    return rows;
}

double ks_distance_to_normal(std::vector<double> xs) {
    if (xs.empty()) throw ArgumentError("ks_distance_to_normal needs data");
    std::sort(xs.begin(), xs.end());
    const double m = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = standard_normal_cdf(xs[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / m - f, f - static_cast<double>(i) / m});
    }
    return d;
}

}  // namespace cost
