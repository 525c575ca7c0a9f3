#include "vfp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vfp/error.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/parallel.hpp"
#include "vfp/random.hpp"

namespace vfp {

namespace {

constexpr double kLogFloor = 1e-300;

Vector uniform_start(const Mdp& mdp) {
    const auto n = static_cast<Eigen::Index>(mdp.n_states());
    return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

// Shannon entropy of every row; 0 log 0 = 0.
Vector row_entropy(const Policy& policy) {
    const Matrix& p = policy.probs();
    Vector h(p.rows());
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
        double acc = 0.0;
        for (Eigen::Index a = 0; a < p.cols(); ++a) {
            if (p(s, a) > 0.0) acc -= p(s, a) * std::log(p(s, a));
        }
        h(s) = acc;
    }
    return h;
}

Policy smoothed_row(const Policy& policy, std::size_t s, std::size_t a, double epsilon) {
    const auto A = static_cast<Eigen::Index>(policy.n_actions());
    Vector row = Vector::Constant(A, epsilon / static_cast<double>(A));
    row(static_cast<Eigen::Index>(a)) += 1.0 - epsilon;
    return policy.with_row(s, row);
}

Vector flatten(const Matrix& m) {
    Vector out(m.size());
    for (Eigen::Index s = 0; s < m.rows(); ++s) {
        for (Eigen::Index a = 0; a < m.cols(); ++a) out(s * m.cols() + a) = m(s, a);
    }
    return out;
}

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index s = 0; s < rows; ++s) {
        for (Eigen::Index a = 0; a < cols; ++a) m(s, a) = v(s * cols + a);
    }
    return m;
}

void require_params(const Mdp& mdp, const SoftmaxParams& params) {
    if (static_cast<std::size_t>(params.theta.rows()) != mdp.n_states() ||
        static_cast<std::size_t>(params.theta.cols()) != mdp.n_actions()) {
        throw Error(ErrorCode::ShapeMismatch, "softmax parameters do not match the MDP shape");
    }
}

StepRecord value_record(std::size_t iteration, double step_norm, const Mdp& mdp, const Policy& policy) {
    StepRecord rec{iteration, step_norm, {}};
    rec.scalars["objective"] = objective(mdp, policy);
    rec.scalars["entropy"] = row_entropy(policy).mean();
    return rec;
}

}  // namespace

SoftmaxParams SoftmaxParams::from_policy(const Policy& policy) {
    return {policy.probs().array().max(kLogFloor).log().matrix()};
}

Policy softmax_policy(const SoftmaxParams& params) {
    const Matrix& theta = params.theta;
    if (!theta.allFinite()) throw Error(ErrorCode::NonFiniteLogits, "softmax logits must be finite");
    Matrix p(theta.rows(), theta.cols());
    for (Eigen::Index s = 0; s < theta.rows(); ++s) {
        const double shift = theta.row(s).maxCoeff();
        p.row(s) = (theta.row(s).array() - shift).exp().matrix();
        p.row(s) /= p.row(s).sum();
    }
    return Policy(std::move(p));
}

Policy resolve_init(const Mdp& mdp, const InitSpec& spec, std::uint64_t /*seed*/) {
    if (spec.kind == InitKind::ExplicitPolicy) {
        if (!spec.policy) throw Error(ErrorCode::MissingPolicy, "explicit initialisation needs a policy");
        require_shape(mdp, *spec.policy);
        return *spec.policy;
    }
    const Policy uniform = Policy::uniform(mdp.n_states(), mdp.n_actions());
    if (spec.kind == InitKind::Interior) return uniform;
    if (!(spec.epsilon > 0.0 && spec.epsilon < 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "init epsilon must lie in (0, 0.5)");
    }
    const Policy optimal = optimal_value(mdp).policy;
    auto action_at = [](const Policy& p, std::size_t s) {
        Eigen::Index a = 0;
        p.probs().row(static_cast<Eigen::Index>(s)).maxCoeff(&a);
        return static_cast<std::size_t>(a);
    };
    if (spec.kind == InitKind::NearVertex) {
        Policy vertex = optimal;
        if (spec.vertex) {
            auto all = deterministic_policies(mdp);
            if (*spec.vertex >= all.size()) throw Error(ErrorCode::InvalidArgument, "vertex index out of range");
            vertex = all[*spec.vertex];
        }
        Policy out = vertex;
        for (std::size_t s = 0; s < mdp.n_states(); ++s) out = smoothed_row(out, s, action_at(vertex, s), spec.epsilon);
        return out;
    }
    // NearBoundary: one state pinned close to its optimal action.
    if (spec.boundary_state >= mdp.n_states()) throw Error(ErrorCode::InvalidArgument, "boundary state out of range");
    return smoothed_row(uniform, spec.boundary_state, action_at(optimal, spec.boundary_state), spec.epsilon);
}

Trajectory run_value_iteration(const Mdp& mdp, const ValueVector& v0, std::size_t iterations, double stop_tol) {
    if (iterations == 0) throw Error(ErrorCode::InvalidArgument, "iterations must be at least 1");
    if (static_cast<std::size_t>(v0.size()) != mdp.n_states()) {
        throw Error(ErrorCode::ShapeMismatch, "initial value has the wrong size");
    }
    Trajectory traj;
    traj.points.push_back(v0);
    traj.meta.push_back({0, 0.0, {}});
    ValueVector v = v0;
    for (std::size_t k = 1; k <= iterations; ++k) {
        GreedyResult next = optimality_bellman_apply(mdp, v);
        const double step = max_abs(next.values - v);
        traj.points.push_back(next.values);
        traj.meta.push_back({k, step, {}});
        v = std::move(next.values);
        if (step < stop_tol) break;
    }
    return traj;
}

Trajectory run_policy_iteration(const Mdp& mdp, const ValueVector& v0) {
    if (static_cast<std::size_t>(v0.size()) != mdp.n_states()) {
        throw Error(ErrorCode::ShapeMismatch, "initial value has the wrong size");
    }
    Trajectory traj;
    traj.points.push_back(v0);
    traj.meta.push_back({0, 0.0, {}});
    ValueVector v = v0;
    std::optional<Policy> current;
    // Policy improvement is strictly monotone, so no deterministic policy
    // repeats; the bound is |A|^|S| plus the confirming step.
    const double bound = std::pow(static_cast<double>(mdp.n_actions()), static_cast<double>(mdp.n_states()));
    const auto cap = static_cast<std::size_t>(std::min(bound, 1e7)) + 1;
    for (std::size_t k = 1; k <= cap; ++k) {
        Policy next = greedy_policy(mdp, v);
        if (current && next == *current) break;
        std::size_t switches = 0;
        for (std::size_t s = 0; s < mdp.n_states(); ++s) {
            if (!current || current->probs().row(static_cast<Eigen::Index>(s)) !=
                                next.probs().row(static_cast<Eigen::Index>(s))) {
                ++switches;
            }
        }
        ValueVector value = value_function(mdp, next);
        StepRecord rec{k, max_abs(value - v), {}};
        rec.scalars["switched_states"] = static_cast<double>(switches);
        traj.points.push_back(value);
        traj.meta.push_back(std::move(rec));
        v = std::move(value);
        current = std::move(next);
    }
    traj.final_policy = current;
    return traj;
}

Vector discounted_distribution(const Mdp& mdp, const Policy& policy, const Vector& rho0) {
    require_shape(mdp, policy);
    if (static_cast<std::size_t>(rho0.size()) != mdp.n_states()) {
        throw Error(ErrorCode::ShapeMismatch, "start distribution has the wrong size");
    }
    if ((rho0.array() < 0.0).any() || std::abs(rho0.sum() - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "start distribution must lie on the simplex");
    }
    const Matrix p_pi = policy_matrix(policy) * mdp.transitions();
    const auto n = p_pi.rows();
    const Matrix system = Matrix::Identity(n, n) - mdp.gamma() * p_pi.transpose();
    return (1.0 - mdp.gamma()) * dense_solve(system, rho0);
}

double objective(const Mdp& mdp, const Policy& policy) { return value_function(mdp, policy).mean(); }

Matrix policy_gradient(const Mdp& mdp, const SoftmaxParams& params, double entropy_coeff) {
    require_params(mdp, params);
    const Policy pi = softmax_policy(params);
    const ValueVector v = value_function(mdp, pi);
    const Matrix q = q_values(mdp, v);
    const Vector d = discounted_distribution(mdp, pi, uniform_start(mdp));
    const Matrix& p = pi.probs();
    const double scale = 1.0 / (1.0 - mdp.gamma());

    Matrix grad(p.rows(), p.cols());
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
        for (Eigen::Index a = 0; a < p.cols(); ++a) {
            grad(s, a) = d(s) * scale * p(s, a) * (q(s, a) - v(s));
        }
    }
    if (entropy_coeff != 0.0) {
        const Vector h = row_entropy(pi);
        for (Eigen::Index s = 0; s < p.rows(); ++s) {
            for (Eigen::Index a = 0; a < p.cols(); ++a) {
                const double log_p = p(s, a) > 0.0 ? std::log(p(s, a)) : 0.0;
                // dH/dtheta(s,a) = -pi(a|s) (log pi(a|s) + H(s)); weighted like
                // the return term so the bonus acts as a per-step reward.
                grad(s, a) += entropy_coeff * d(s) * scale * (-p(s, a) * (log_p + h(s)));
            }
        }
    }
    return grad;
}

Matrix fisher_information(const Mdp& mdp, const SoftmaxParams& params) {
    require_params(mdp, params);
    const Policy pi = softmax_policy(params);
    const Vector d = discounted_distribution(mdp, pi, uniform_start(mdp));
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    Matrix f = Matrix::Zero(S * A, S * A);
    for (Eigen::Index s = 0; s < S; ++s) {
        const Vector p = pi.probs().row(s).transpose();
        Matrix block = -p * p.transpose();
        block.diagonal() += p;
        f.block(s * A, s * A, A, A) = d(s) * block;
    }
    return f;
}

Matrix natural_policy_gradient(const Mdp& mdp, const SoftmaxParams& params, double damping) {
    if (!(damping > 0.0)) throw Error(ErrorCode::InvalidArgument, "damping must be positive");
    const Matrix grad = policy_gradient(mdp, params);
    Matrix f = fisher_information(mdp, params);
    f.diagonal().array() += damping;
    const Vector g = f.ldlt().solve(flatten(grad));
    return unflatten(g, grad.rows(), grad.cols());
}

Trajectory run_policy_gradient(const Mdp& mdp, const InitSpec& init, double eta, std::size_t iterations,
                               double entropy_coeff, std::uint64_t seed) {
    if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
    SoftmaxParams params = SoftmaxParams::from_policy(resolve_init(mdp, init, seed));
    Trajectory traj;
    Policy pi = softmax_policy(params);
    traj.points.push_back(value_function(mdp, pi));
    traj.meta.push_back(value_record(0, 0.0, mdp, pi));
    for (std::size_t k = 1; k <= iterations; ++k) {
        const Matrix grad = policy_gradient(mdp, params, entropy_coeff);
        params.theta += eta * grad;
        pi = softmax_policy(params);
        traj.points.push_back(value_function(mdp, pi));
        StepRecord rec = value_record(k, max_abs(traj.points.back() - traj.points[traj.points.size() - 2]), mdp, pi);
        rec.scalars["gradient_norm"] = grad.norm();
        traj.meta.push_back(std::move(rec));
    }
    traj.final_policy = pi;
    return traj;
}

Trajectory run_npg(const Mdp& mdp, const InitSpec& init, double eta, std::size_t iterations, double damping,
                   std::uint64_t seed) {
    if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
    if (!(damping > 0.0)) throw Error(ErrorCode::InvalidArgument, "damping must be positive");
    SoftmaxParams params = SoftmaxParams::from_policy(resolve_init(mdp, init, seed));
    Trajectory traj;
    Policy pi = softmax_policy(params);
    traj.points.push_back(value_function(mdp, pi));
    traj.meta.push_back(value_record(0, 0.0, mdp, pi));
    for (std::size_t k = 1; k <= iterations; ++k) {
        const Matrix direction = natural_policy_gradient(mdp, params, damping);
        params.theta += eta * direction;
        pi = softmax_policy(params);
        traj.points.push_back(value_function(mdp, pi));
        StepRecord rec = value_record(k, max_abs(traj.points.back() - traj.points[traj.points.size() - 2]), mdp, pi);
        rec.scalars["gradient_norm"] = direction.norm();
        traj.meta.push_back(std::move(rec));
    }
    traj.final_policy = pi;
    return traj;
}

void CemConfig::validate() const {
    if (population == 0) throw Error(ErrorCode::InvalidArgument, "CEM population must be positive");
    if (elites == 0 || elites > population) throw Error(ErrorCode::InvalidArgument, "CEM elites must lie in [1, N]");
    if (!(init_cov_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "CEM initial covariance must be positive");
    if (!(noise_scale >= 0.0)) throw Error(ErrorCode::InvalidArgument, "CEM noise must be nonnegative");
    if (iterations == 0) throw Error(ErrorCode::InvalidArgument, "CEM iterations must be positive");
}

std::size_t cem_dimension(const Mdp& mdp) { return mdp.n_states() * (mdp.n_actions() - 1); }

Vector cem_encode(const SoftmaxParams& params) {
    const auto S = params.theta.rows();
    const auto A = params.theta.cols();
    Vector x(S * (A - 1));
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index a = 0; a + 1 < A; ++a) x(s * (A - 1) + a) = params.theta(s, a) - params.theta(s, A - 1);
    }
    return x;
}

SoftmaxParams cem_decode(const Vector& x, std::size_t n_states, std::size_t n_actions) {
    const auto S = static_cast<Eigen::Index>(n_states);
    const auto A = static_cast<Eigen::Index>(n_actions);
    if (x.size() != S * (A - 1)) throw Error(ErrorCode::ShapeMismatch, "CEM vector has the wrong length");
    Matrix theta = Matrix::Zero(S, A);
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index a = 0; a + 1 < A; ++a) theta(s, a) = x(s * (A - 1) + a);
    }
    return {std::move(theta)};
}

Trajectory run_cem(const Mdp& mdp, const SoftmaxParams& init_mean, const CemConfig& config) {
    config.validate();
    require_params(mdp, init_mean);
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    const auto dim = static_cast<Eigen::Index>(cem_dimension(mdp));

    Vector mean = cem_encode(init_mean);
    Matrix cov = config.init_cov_scale * Matrix::Identity(dim, dim);

    Trajectory traj;
    auto record = [&](std::size_t k, double step, double best) {
        const Policy pi = softmax_policy(cem_decode(mean, S, A));
        traj.points.push_back(value_function(mdp, pi));
        StepRecord rec = value_record(k, step, mdp, pi);
        rec.scalars["cov_trace"] = cov.trace();
        rec.scalars["best_score"] = best;
        traj.meta.push_back(std::move(rec));
        traj.final_policy = pi;
    };
    record(0, 0.0, objective(mdp, softmax_policy(cem_decode(mean, S, A))));

    std::vector<Vector> members(config.population);
    std::vector<double> scores(config.population);
    for (std::size_t k = 1; k <= config.iterations; ++k) {
        // Symmetric square root tolerates the rank-deficient covariance that
        // noise-free CEM collapses to.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
        const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

        parallel_for(config.population, [&](std::size_t m) {
            Rng rng(derive_seed(config.seed, k, m));
            Vector z(dim);
            for (Eigen::Index i = 0; i < dim; ++i) z(i) = rng.normal();
            members[m] = mean + root * z;
            scores[m] = objective(mdp, softmax_policy(cem_decode(members[m], S, A)));
        });

        std::vector<std::size_t> order(config.population);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

        Vector next_mean = Vector::Zero(dim);
        for (std::size_t e = 0; e < config.elites; ++e) next_mean += members[order[e]];
        next_mean /= static_cast<double>(config.elites);
        Matrix next_cov = Matrix::Zero(dim, dim);
        for (std::size_t e = 0; e < config.elites; ++e) {
            const Vector c = members[order[e]] - next_mean;
            next_cov += c * c.transpose();
        }
        next_cov /= static_cast<double>(config.elites);
        next_cov.diagonal().array() += config.noise_scale;

        const double step = (next_mean - mean).cwiseAbs().maxCoeff();
        mean = std::move(next_mean);
        cov = std::move(next_cov);
        record(k, step, scores[order.front()]);
    }
    return traj;
}

}  // namespace vfp
