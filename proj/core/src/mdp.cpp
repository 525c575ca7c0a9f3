#include "vfp/mdp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "vfp/error.hpp"
#include "vfp/random.hpp"

namespace vfp {

namespace {

constexpr double kAcceptTolerance = 1e-9;
constexpr double kExactTolerance = 1e-12;

// Validates row i of a row-stochastic matrix in place.
void check_stochastic_rows(Matrix& m, std::string_view what) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double p = m(i, j);
            if (!std::isfinite(p) || p < 0.0) {
                throw Error(ErrorCode::InvalidStochasticRow,
                            std::string(what) + " row " + std::to_string(i) + " has a negative or non-finite entry");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kAcceptTolerance) {
            throw Error(ErrorCode::InvalidStochasticRow,
                        std::string(what) + " row " + std::to_string(i) + " sums to " + std::to_string(sum));
        }
        if (std::abs(sum - 1.0) > kExactTolerance) {
            m.row(i) /= sum;
        }
    }
}

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw Error(ErrorCode::InvalidGamma, "gamma must lie in [0, 1), got " + std::to_string(gamma));
    }
}

// Flat Dirichlet(1, ..., 1) via normalised exponentials.
void dirichlet_row(Rng& rng, Eigen::Ref<Vector> row) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        row(j) = rng.exponential();
        sum += row(j);
    }
    if (sum <= 0.0) {
        row.setConstant(1.0 / static_cast<double>(row.size()));
        return;
    }
    row /= sum;
}

Mdp make_fixture(std::size_t n_actions, double gamma, std::initializer_list<double> rewards,
                 std::initializer_list<std::array<double, 2>> rows) {
    Vector r(static_cast<Eigen::Index>(rewards.size()));
    Eigen::Index i = 0;
    for (double x : rewards) r(i++) = x;
    Matrix p(static_cast<Eigen::Index>(rows.size()), 2);
    i = 0;
    for (const auto& row : rows) {
        p(i, 0) = row[0];
        p(i, 1) = row[1];
        ++i;
    }
    return Mdp(2, n_actions, std::move(r), std::move(p), gamma);
}

}  // namespace

Mdp::Mdp(std::size_t n_states, std::size_t n_actions, Vector rewards, Matrix transitions, double gamma)
    : n_states_(n_states),
      n_actions_(n_actions),
      rewards_(std::move(rewards)),
      transitions_(std::move(transitions)),
      gamma_(gamma) {
    if (n_states_ == 0 || n_actions_ == 0) {
        throw Error(ErrorCode::MalformedDocument, "n_states and n_actions must be positive");
    }
    const auto rows = static_cast<Eigen::Index>(n_states_ * n_actions_);
    if (rewards_.size() != rows) {
        throw Error(ErrorCode::MalformedDocument, "rewards must have n_states * n_actions entries");
    }
    if (transitions_.rows() != rows || transitions_.cols() != static_cast<Eigen::Index>(n_states_)) {
        throw Error(ErrorCode::MalformedDocument, "transitions must be (n_states * n_actions) x n_states");
    }
    if (!rewards_.allFinite()) {
        throw Error(ErrorCode::MalformedDocument, "rewards must be finite");
    }
    check_gamma(gamma_);
    check_stochastic_rows(transitions_, "transitions");
}

double Mdp::reward_bound() const noexcept { return rewards_.cwiseAbs().maxCoeff(); }

bool operator==(const Mdp& a, const Mdp& b) {
    return a.n_states_ == b.n_states_ && a.n_actions_ == b.n_actions_ && a.gamma_ == b.gamma_ &&
           a.rewards_ == b.rewards_ && a.transitions_ == b.transitions_;
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) {
        throw Error(ErrorCode::ShapeMismatch, "policy must have at least one state and one action");
    }
    check_stochastic_rows(probs_, "policy");
}

Policy Policy::uniform(std::size_t n_states, std::size_t n_actions) {
    return Policy(Matrix::Constant(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions),
                                   1.0 / static_cast<double>(n_actions)));
}

Policy Policy::deterministic(std::size_t n_actions, const std::vector<std::size_t>& actions) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), static_cast<Eigen::Index>(n_actions));
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= n_actions) {
            throw Error(ErrorCode::InvalidArgument, "action index out of range");
        }
        m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
    }
    return Policy(std::move(m));
}

Policy Policy::with_row(std::size_t s, const Eigen::Ref<const Vector>& row) const {
    if (s >= n_states() || row.size() != probs_.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "with_row: bad state or row length");
    }
    Matrix m = probs_;
    m.row(static_cast<Eigen::Index>(s)) = row.transpose();
    return Policy(std::move(m));
}

Policy Policy::with_action(std::size_t s, std::size_t a) const {
    if (a >= n_actions()) {
        throw Error(ErrorCode::InvalidArgument, "with_action: action out of range");
    }
    Vector row = Vector::Zero(probs_.cols());
    row(static_cast<Eigen::Index>(a)) = 1.0;
    return with_row(s, row);
}

bool Policy::is_deterministic_at(std::size_t s) const {
    const auto row = probs_.row(static_cast<Eigen::Index>(s));
    return (row.array() == 1.0).count() == 1 && (row.array() == 0.0).count() == row.size() - 1;
}

bool Policy::is_deterministic() const {
    for (std::size_t s = 0; s < n_states(); ++s) {
        if (!is_deterministic_at(s)) return false;
    }
    return true;
}

void require_shape(const Mdp& mdp, const Policy& policy) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
        throw Error(ErrorCode::ShapeMismatch, "policy is " + std::to_string(policy.n_states()) + "x" +
                                                  std::to_string(policy.n_actions()) + ", MDP needs " +
                                                  std::to_string(mdp.n_states()) + "x" +
                                                  std::to_string(mdp.n_actions()));
    }
}

std::string_view fixture_name(FixtureId id) noexcept {
    switch (id) {
        case FixtureId::Fig2a: return "fig2a";
        case FixtureId::Fig2b: return "fig2b";
        case FixtureId::Fig2c: return "fig2c";
        case FixtureId::Fig2d: return "fig2d";
        case FixtureId::ThreeAction: return "threeaction";
        case FixtureId::Dyn2: return "dyn2";
    }
    return "";
}

FixtureId parse_fixture(std::string_view name) {
    for (FixtureId id : all_fixtures()) {
        if (fixture_name(id) == name) return id;
    }
    throw Error(ErrorCode::UnknownFixture, "no fixture named '" + std::string(name) + "'");
}

const std::vector<FixtureId>& all_fixtures() noexcept {
    static const std::vector<FixtureId> ids{FixtureId::Fig2a,       FixtureId::Fig2b, FixtureId::Fig2c,
                                            FixtureId::Fig2d,       FixtureId::ThreeAction, FixtureId::Dyn2};
    return ids;
}

Mdp builtin_fixture(FixtureId id) {
    switch (id) {
        case FixtureId::Fig2a:
            return make_fixture(2, 0.9, {0.06, 0.38, -0.13, 0.64},
                                {{0.01, 0.99}, {0.92, 0.08}, {0.08, 0.92}, {0.70, 0.30}});
        case FixtureId::Fig2b:
            return make_fixture(2, 0.9, {0.88, -0.02, -0.98, 0.42},
                                {{0.96, 0.04}, {0.19, 0.81}, {0.43, 0.57}, {0.72, 0.28}});
        case FixtureId::Fig2c:
            return make_fixture(3, 0.9, {-0.93, -0.49, 0.63, 0.78, 0.14, 0.41},
                                {{0.52, 0.48}, {0.5, 0.5}, {0.99, 0.01}, {0.85, 0.15}, {0.11, 0.89}, {0.1, 0.9}});
        case FixtureId::ThreeAction:
            return make_fixture(3, 0.8, {-0.1, -1., 0.1, 0.4, 1.5, 0.1},
                                {{0.9, 0.1}, {0.2, 0.8}, {0.7, 0.3}, {0.05, 0.95}, {0.25, 0.75}, {0.3, 0.7}});
        case FixtureId::Fig2d:
        case FixtureId::Dyn2:
            return make_fixture(2, 0.9, {-0.45, -0.1, 0.5, 0.5},
                                {{0.7, 0.3}, {0.99, 0.01}, {0.2, 0.8}, {0.99, 0.01}});
    }
    throw Error(ErrorCode::UnknownFixture, "unhandled fixture id");
}

Mdp example1_mdp(double gamma) {
    Vector r(4);
    r << 0.0, 1.0, 0.0, 0.0;
    Matrix p(4, 2);
    p << 1.0, 0.0,  // s1, a1: stay
        0.0, 1.0,   // s1, a2: to terminal
        0.0, 1.0,   // s2 absorbing
        0.0, 1.0;
    return Mdp(2, 2, std::move(r), std::move(p), gamma);
}

Mdp random_mdp(std::size_t n_states, std::size_t n_actions, double gamma, std::uint64_t seed) {
    check_gamma(gamma);
    if (n_states == 0 || n_actions == 0) {
        throw Error(ErrorCode::InvalidArgument, "random_mdp needs at least one state and action");
    }
    Rng rng(seed);
    const auto rows = static_cast<Eigen::Index>(n_states * n_actions);
    Vector r(rows);
    for (Eigen::Index i = 0; i < rows; ++i) r(i) = rng.uniform(-1.0, 1.0);
    Matrix p(rows, static_cast<Eigen::Index>(n_states));
    for (Eigen::Index i = 0; i < rows; ++i) {
        Vector row(p.cols());
        dirichlet_row(rng, row);
        p.row(i) = row.transpose();
    }
    return Mdp(n_states, n_actions, std::move(r), std::move(p), gamma);
}

Policy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions));
    for (Eigen::Index s = 0; s < m.rows(); ++s) {
        Vector row(m.cols());
        dirichlet_row(rng, row);
        m.row(s) = row.transpose();
    }
    return Policy(std::move(m));
}

Policy random_policy(const Mdp& mdp, std::uint64_t seed) {
    return random_policy(mdp.n_states(), mdp.n_actions(), seed);
}

std::vector<Policy> deterministic_policies(const Mdp& mdp, std::size_t cap) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    std::size_t count = 1;
    for (std::size_t s = 0; s < S; ++s) {
        if (count > cap / A) {
            throw Error(ErrorCode::EnumerationTooLarge, "|A|^|S| exceeds the enumeration cap");
        }
        count *= A;
    }
    if (count > cap) {
        throw Error(ErrorCode::EnumerationTooLarge, "|A|^|S| exceeds the enumeration cap");
    }
    std::vector<Policy> out;
    out.reserve(count);
    std::vector<std::size_t> actions(S, 0);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(Policy::deterministic(A, actions));
        // Odometer with the last state varying fastest.
        for (std::size_t s = S; s-- > 0;) {
            if (++actions[s] < A) break;
            actions[s] = 0;
        }
    }
    return out;
}

Matrix policy_matrix(const Policy& policy) {
    const auto S = static_cast<Eigen::Index>(policy.n_states());
    const auto A = static_cast<Eigen::Index>(policy.n_actions());
    Matrix m = Matrix::Zero(S, S * A);
    for (Eigen::Index i = 0; i < S; ++i) {
        m.block(i, i * A, 1, A) = policy.probs().row(i);
    }
    return m;
}

namespace {

using nlohmann::json;

json parse_document(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
}

std::size_t positive_count(const json& doc, const char* key) {
    const auto& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
        throw Error(ErrorCode::MalformedDocument, std::string(key) + " must be a positive integer");
    }
    return v.get<std::size_t>();
}

Vector number_array(const json& v, const std::string& what) {
    if (!v.is_array()) throw Error(ErrorCode::MalformedDocument, what + " must be an array");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw Error(ErrorCode::MalformedDocument, what + " must contain numbers");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

Matrix number_rows(const json& v, std::size_t cols, const std::string& what) {
    if (!v.is_array()) throw Error(ErrorCode::MalformedDocument, what + " must be an array of rows");
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
        Vector row = number_array(v[i], what + " row");
        if (static_cast<std::size_t>(row.size()) != cols) {
            throw Error(ErrorCode::MalformedDocument,
                        what + " row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
        }
        out.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return out;
}

json to_json_array(const Eigen::Ref<const Vector>& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json to_json_rows(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json_array(m.row(i).transpose()));
    return out;
}

}  // namespace

Mdp load_mdp(std::string_view text) {
    const json doc = parse_document(text);
    if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "MDP document must be a JSON object");
    static const std::set<std::string> keys{"n_states", "n_actions", "gamma", "rewards", "transitions"};
    for (const auto& [key, _] : doc.items()) {
        if (!keys.contains(key)) throw Error(ErrorCode::MalformedDocument, "unexpected field '" + key + "'");
    }
    for (const auto& key : keys) {
        if (!doc.contains(key)) throw Error(ErrorCode::MalformedDocument, "missing field '" + key + "'");
    }
    const std::size_t S = positive_count(doc, "n_states");
    const std::size_t A = positive_count(doc, "n_actions");
    if (!doc["gamma"].is_number()) throw Error(ErrorCode::MalformedDocument, "gamma must be a number");
    const double gamma = doc["gamma"].get<double>();
    Vector rewards = number_array(doc["rewards"], "rewards");
    Matrix transitions = number_rows(doc["transitions"], S, "transitions");
    if (static_cast<std::size_t>(rewards.size()) != S * A) {
        throw Error(ErrorCode::MalformedDocument, "rewards must have n_states * n_actions entries");
    }
    if (static_cast<std::size_t>(transitions.rows()) != S * A) {
        throw Error(ErrorCode::MalformedDocument, "transitions must have n_states * n_actions rows");
    }
    return Mdp(S, A, std::move(rewards), std::move(transitions), gamma);
}

std::string dump_mdp(const Mdp& mdp) {
    json doc;
    doc["n_states"] = mdp.n_states();
    doc["n_actions"] = mdp.n_actions();
    doc["gamma"] = mdp.gamma();
    doc["rewards"] = to_json_array(mdp.rewards());
    doc["transitions"] = to_json_rows(mdp.transitions());
    return doc.dump(2) + "\n";
}

Policy load_policy(std::string_view text) {
    const json doc = parse_document(text);
    if (!doc.is_object() || !doc.contains("probs") || doc.size() != 1) {
        throw Error(ErrorCode::MalformedDocument, "policy document must be {\"probs\": [[...], ...]}");
    }
    const auto& rows = doc["probs"];
    if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
        throw Error(ErrorCode::MalformedDocument, "probs must be a non-empty array of rows");
    }
    return Policy(number_rows(rows, rows[0].size(), "probs"));
}

std::string dump_policy(const Policy& policy) {
    json doc;
    doc["probs"] = to_json_rows(policy.probs());
    return doc.dump(2) + "\n";
}

}  // namespace vfp
