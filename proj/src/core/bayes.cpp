#include "bayes.hpp"

#include <cmath>
#include <cstdio>

namespace rblab {

const char* to_string(LearnMode mode) { return mode == LearnMode::BothActions ? "both" : "passive_only"; }

LearnMode learn_mode_from_string(const std::string& s)
{
    if (s == "both")
        return LearnMode::BothActions;
    if (s == "passive_only")
        return LearnMode::PassiveOnly;
    throw ValidationError("unknown learn mode '" + s + "' (expected both or passive_only)");
}

Vector sample_dirichlet(const Vector& alpha, Rng& rng)
{
    Vector x(alpha.size());
    double total = 0.0;
    for (Eigen::Index k = 0; k < alpha.size(); ++k) {
        x(k) = std::gamma_distribution<double>(alpha(k), 1.0)(rng);
        total += x(k);
    }
    if (!(total > 0.0)) {
        // Every component underflowed; fall back to the heaviest parameter.
        Eigen::Index best;
        alpha.maxCoeff(&best);
        x.setZero();
        x(best) = 1.0;
        return x;
    }
    return x / total;
}

PosteriorState PosteriorState::init_prior(const std::vector<int>& num_states, double concentration, LearnMode mode,
                                          std::vector<Matrix> known_active)
{
    if (!(concentration > 0.0) || !std::isfinite(concentration))
        throw ValidationError("init_prior: prior counts must be strictly positive");
    if (mode == LearnMode::PassiveOnly && known_active.size() != num_states.size())
        throw ValidationError("init_prior: passive-only mode needs one known active matrix per arm");
    if (mode == LearnMode::BothActions && !known_active.empty())
        throw ValidationError("init_prior: known active matrices given but both actions are learned");

    PosteriorState post;
    post.mode_ = mode;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < num_states.size(); ++i) {
        const int S = num_states[i];
        if (S < 1)
            throw ValidationError("init_prior: arm with no states");
        ArmState arm;
        arm.S = S;
        for (int a = 0; a < 2; ++a) {
            arm.prior[a] = Matrix::Constant(S, S, concentration);
            arm.counts[a] = arm.prior[a];
            arm.transitions[a].assign(static_cast<std::size_t>(S) * S, 0);
        }
        if (mode == LearnMode::PassiveOnly) {
            if (known_active[i].rows() != S || known_active[i].cols() != S)
                throw ValidationError("init_prior: known active matrix has wrong shape");
            require_stochastic(known_active[i], "known active matrix");
            arm.known_active = std::move(known_active[i]);
        }
        post.arms_.push_back(std::move(arm));
        post.offsets_.push_back(offset);
        offset += 2 * static_cast<std::size_t>(S);
    }
    post.visit_flat_.assign(offset, 0);
    return post;
}

void PosteriorState::check_index(int arm, int state, int action) const
{
    if (arm < 0 || arm >= num_arms())
        throw ValidationError("posterior: arm index " + std::to_string(arm) + " out of range");
    if (state < 0 || state >= arms_[arm].S)
        throw ValidationError("posterior: state " + std::to_string(state) + " out of range for arm " +
                              std::to_string(arm));
    if (action != 0 && action != 1)
        throw ValidationError("posterior: action must be 0 or 1");
}

void PosteriorState::set_prior_row(int arm, int state, int action, const Vector& row)
{
    check_index(arm, state, action);
    auto& a = arms_[arm];
    if (row.size() != a.S)
        throw ValidationError("set_prior_row: row length differs from S");
    for (Eigen::Index k = 0; k < row.size(); ++k)
        if (!(row(k) > 0.0) || !std::isfinite(row(k)))
            throw ValidationError("set_prior_row: prior counts must be strictly positive");
    if (visits(arm, state, action) != 0)
        throw ValidationError("set_prior_row: row already has observations");
    a.prior[action].row(state) = row.transpose();
    a.counts[action].row(state) = row.transpose();
}

void PosteriorState::observe(int arm, int state, int action, int next_state)
{
    check_index(arm, state, action);
    auto& a = arms_[arm];
    if (next_state < 0 || next_state >= a.S)
        throw ValidationError("observe: next state out of range");
    a.counts[action](state, next_state) += 1.0;
    a.transitions[action][static_cast<std::size_t>(state) * a.S + next_state] += 1;
    visit_flat_[flat(arm, state, action)] += 1;
}

std::vector<ArmDynamics> PosteriorState::sample_model(Rng& rng) const
{
    std::vector<ArmDynamics> out;
    out.reserve(arms_.size());
    for (const auto& a : arms_) {
        ArmDynamics dyn;
        dyn.p_passive.resize(a.S, a.S);
        for (int s = 0; s < a.S; ++s)
            dyn.p_passive.row(s) = sample_dirichlet(a.counts[0].row(s).transpose(), rng).transpose();
        if (a.known_active) {
            dyn.p_active = *a.known_active;
        } else {
            dyn.p_active.resize(a.S, a.S);
            for (int s = 0; s < a.S; ++s)
                dyn.p_active.row(s) = sample_dirichlet(a.counts[1].row(s).transpose(), rng).transpose();
        }
        out.push_back(std::move(dyn));
    }
    return out;
}

const Vector PosteriorState::counts_row(int arm, int state, int action) const
{
    check_index(arm, state, action);
    return arms_[arm].counts[action].row(state).transpose();
}

Vector PosteriorState::posterior_mean(int arm, int state, int action) const
{
    Vector row = counts_row(arm, state, action);
    return row / row.sum();
}

EmpiricalRow PosteriorState::empirical_row(int arm, int state, int action) const
{
    check_index(arm, state, action);
    const auto& a = arms_[arm];
    EmpiricalRow out;
    out.row = Vector::Zero(a.S);
    const auto n = visits(arm, state, action);
    out.visited = n > 0;
    const double denom = static_cast<double>(std::max<std::int64_t>(1, n));
    for (int z = 0; z < a.S; ++z)
        out.row(z) = static_cast<double>(a.transitions[action][static_cast<std::size_t>(state) * a.S + z]) / denom;
    return out;
}

std::int64_t PosteriorState::visits(int arm, int state, int action) const
{
    check_index(arm, state, action);
    return visit_flat_[flat(arm, state, action)];
}

std::int64_t PosteriorState::transitions(int arm, int state, int action, int next_state) const
{
    check_index(arm, state, action);
    const auto& a = arms_[arm];
    if (next_state < 0 || next_state >= a.S)
        throw ValidationError("transitions: next state out of range");
    return a.transitions[action][static_cast<std::size_t>(state) * a.S + next_state];
}

std::int64_t PosteriorState::observed_steps(int arm) const
{
    std::int64_t total = 0;
    for (int s = 0; s < arms_[arm].S; ++s)
        total += visit_flat_[flat(arm, s, 0)] + visit_flat_[flat(arm, s, 1)];
    return total;
}

std::vector<std::string> PosteriorState::check_invariants() const
{
    std::vector<std::string> out;
    char buf[200];
    for (int i = 0; i < num_arms(); ++i) {
        const auto& a = arms_[i];
        for (int act = 0; act < 2; ++act)
            for (int s = 0; s < a.S; ++s) {
                std::int64_t row_total = 0;
                for (int z = 0; z < a.S; ++z) {
                    const auto n = a.transitions[act][static_cast<std::size_t>(s) * a.S + z];
                    row_total += n;
                    if (a.counts[act](s, z) != a.prior[act](s, z) + static_cast<double>(n)) {
                        std::snprintf(buf, sizeof(buf), "arm %d (s=%d,a=%d,s'=%d): counts != prior + transitions", i,
                                      s, act, z);
                        out.emplace_back(buf);
                    }
                }
                if (row_total != visit_flat_[flat(i, s, act)]) {
                    std::snprintf(buf, sizeof(buf), "arm %d (s=%d,a=%d): transitions sum %lld != visits %lld", i, s,
                                  act, static_cast<long long>(row_total),
                                  static_cast<long long>(visit_flat_[flat(i, s, act)]));
                    out.emplace_back(buf);
                }
            }
    }
    return out;
}

Json PosteriorState::to_json() const
{
    Json j;
    j["mode"] = to_string(mode_);
    Json arms = Json::array();
    for (int i = 0; i < num_arms(); ++i) {
        const auto& a = arms_[i];
        Json aj;
        aj["S"] = a.S;
        aj["prior"] = Json::array({matrix_to_json(a.prior[0]), matrix_to_json(a.prior[1])});
        Json trans = Json::array();
        Json vis = Json::array();
        for (int act = 0; act < 2; ++act) {
            Json rows = Json::array();
            Json v = Json::array();
            for (int s = 0; s < a.S; ++s) {
                Json row = Json::array();
                for (int z = 0; z < a.S; ++z)
                    row.push_back(a.transitions[act][static_cast<std::size_t>(s) * a.S + z]);
                rows.push_back(std::move(row));
                v.push_back(visit_flat_[flat(i, s, act)]);
            }
            trans.push_back(std::move(rows));
            vis.push_back(std::move(v));
        }
        aj["transitions"] = std::move(trans);
        aj["visits"] = std::move(vis);
        aj["known_active"] = a.known_active ? matrix_to_json(*a.known_active) : Json(nullptr);
        arms.push_back(std::move(aj));
    }
    j["arms"] = std::move(arms);
    return j;
}

PosteriorState PosteriorState::from_json(const Json& j)
{
    try {
        const auto mode = learn_mode_from_string(j.at("mode").get<std::string>());
        std::vector<int> shape;
        std::vector<Matrix> known;
        for (const auto& aj : j.at("arms")) {
            shape.push_back(aj.at("S").get<int>());
            if (mode == LearnMode::PassiveOnly)
                known.push_back(matrix_from_json(aj.at("known_active"), "known_active"));
        }
        auto post = init_prior(shape, 1.0, mode, std::move(known));
        for (int i = 0; i < post.num_arms(); ++i) {
            const auto& aj = j.at("arms")[i];
            auto& a = post.arms_[i];
            for (int act = 0; act < 2; ++act) {
                a.prior[act] = matrix_from_json(aj.at("prior")[act], "prior");
                a.counts[act] = a.prior[act];
                for (int s = 0; s < a.S; ++s) {
                    for (int z = 0; z < a.S; ++z) {
                        const auto n = aj.at("transitions")[act][s][z].get<std::int64_t>();
                        a.transitions[act][static_cast<std::size_t>(s) * a.S + z] = n;
                        a.counts[act](s, z) += static_cast<double>(n);
                    }
                    post.visit_flat_[post.flat(i, s, act)] = aj.at("visits")[act][s].get<std::int64_t>();
                }
            }
        }
        auto problems = post.check_invariants();
        if (!problems.empty())
            throw ValidationError("posterior snapshot inconsistent: " + problems.front());
        return post;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("posterior snapshot: ") + e.what());
    }
}

Json posterior_snapshot(const BanditInstance& instance, const PosteriorState& post)
{
    Json j = instance_to_json(instance);
    j["posterior"] = post.to_json();
    return j;
}

}  // namespace rblab
