#include "cost/nls.hpp"

#include "cost/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace cost {

namespace {

constexpr double kMaxSolveDamping = 1e6;

double sum_squares(const Vector& r) { return r.squaredNorm(); }

// Solves (JtJ + lambda I) delta = Jtr, escalating lambda while the factorisation
// fails. Returns the damping actually used.
double damped_solve(const Matrix& jtj, const Vector& jtr, double lambda, Vector& delta) {
    const Eigen::Index p = jtj.rows();
    double damping = lambda;
    while (true) {
        Matrix a = jtj;
        a.diagonal().array() += damping;
        Eigen::LDLT<Matrix> ldlt(a);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            delta = ldlt.solve(jtr);
            if (delta.allFinite() && delta.size() == p) {
                return damping;
            }
        }
        if (damping >= kMaxSolveDamping) {
            throw NumericError("normal equations remain singular at damping " +
                               std::to_string(damping));
        }
        damping = std::min(kMaxSolveDamping, std::max(damping * 10.0, 1e-12));
    }
}

FitResult fit_from(const ParametricModel& model, const Dataset& data, const FitOptions& opts,
                   Vector theta) {
    const Matrix& x = data.predictors();
    const Vector& y = data.responses();

    Vector resid = y - model.predict(theta, x);
    double loss = sum_squares(resid);
    if (!std::isfinite(loss)) {
        throw NumericError(model.label() + ": non-finite loss at the initial point");
    }

    FitResult out;
    out.loss_history.push_back(loss);
    double lambda = opts.damping_initial;
    bool need_jacobian = true;
    Matrix jtj;
    Vector jtr;
    Vector delta;

    int iter = 0;
    bool converged = loss == 0.0;
    while (!converged && iter < opts.max_iterations) {
        ++iter;
        if (need_jacobian) {
            const Matrix jac = model.jacobian(theta, x);
            jtj = jac.transpose() * jac;
            jtr = jac.transpose() * resid;
            need_jacobian = false;
        }
        lambda = damped_solve(jtj, jtr, lambda, delta);

        if (delta.norm() <= opts.step_tolerance * (theta.norm() + opts.step_tolerance)) {
            converged = true;
            break;
        }

        Vector candidate = theta + delta;
        Vector cand_resid = y - model.predict(candidate, x);
        const double cand_loss = sum_squares(cand_resid);
        // Ties are accepted: near the minimum the loss stops resolving the step.
        if (std::isfinite(cand_loss) && cand_loss <= loss) {
            const double rel_decrease = loss > 0.0 ? (loss - cand_loss) / loss : 0.0;
            theta = std::move(candidate);
            resid = std::move(cand_resid);
            loss = cand_loss;
            out.loss_history.push_back(loss);
            lambda *= 0.5;
            need_jacobian = true;
            if (rel_decrease < opts.loss_tolerance || loss == 0.0) {
                converged = true;
            }
        } else {
            lambda *= 10.0;
        }
    }

    out.theta_hat = std::move(theta);
    out.final_loss = loss;
    out.iterations = iter;
    out.converged = converged;
    return out;
}

}  // namespace

void FitOptions::validate() const {
    if (max_iterations < 1) throw ConfigError("fit.max_iterations must be >= 1");
    if (!(loss_tolerance > 0.0)) throw ConfigError("fit.loss_tolerance must be > 0");
    if (!(step_tolerance > 0.0)) throw ConfigError("fit.step_tolerance must be > 0");
    if (!(damping_initial > 0.0)) throw ConfigError("fit.damping_initial must be > 0");
    if (restarts < 0) throw ConfigError("fit.restarts must be >= 0");
    if (!(restart_spread > 0.0)) throw ConfigError("fit.restart_spread must be > 0");
}

FitResult fit(const ParametricModel& model, const Dataset& data, const FitOptions& opts) {
    opts.validate();
    if (data.q() != model.q()) {
        throw ArgumentError(model.label() + ": dataset has q=" + std::to_string(data.q()));
    }
    if (data.n() < model.p()) {
        throw UnderdeterminedError(model.label() + ": " + std::to_string(data.n()) +
                                   " observations for " + std::to_string(model.p()) +
                                   " parameters");
    }
    Vector start = opts.initial_point.value_or(Vector::Zero(model.p()));
    if (start.size() != model.p()) {
        throw ArgumentError("fit.initial_point has the wrong length");
    }

    FitResult best = fit_from(model, data, opts, start);
    if (opts.restarts > 0) {
        std::mt19937_64 rng(opts.restart_seed);
        std::uniform_real_distribution<double> offset(-opts.restart_spread, opts.restart_spread);
        for (int k = 0; k < opts.restarts; ++k) {
            Vector point = start;
            for (Eigen::Index j = 0; j < point.size(); ++j) {
                point(j) += offset(rng);
            }
            FitResult trial;
            try {
                trial = fit_from(model, data, opts, point);
            } catch (const NumericError&) {
                continue;
            }
            if (trial.final_loss < best.final_loss) {
                best = std::move(trial);
            }
        }
    }
    return best;
}

}  // namespace cost
