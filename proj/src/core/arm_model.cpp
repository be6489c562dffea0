#include "arm_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace rblab {

namespace {

std::string fmt(const char* pattern, auto... args)
{
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, args...);
    return buf;
}

double row_overlap(const Matrix& a, int ra, const Matrix& b, int rb)
{
    double sum = 0.0;
    for (Eigen::Index z = 0; z < a.cols(); ++z)
        sum += std::min(a(ra, z), b(rb, z));
    return sum;
}

}  // namespace

const char* to_string(RewardModel m) { return m == RewardModel::A ? "A" : "B"; }

RewardModel reward_model_from_string(const std::string& s)
{
    if (s == "A" || s == "a")
        return RewardModel::A;
    if (s == "B" || s == "b")
        return RewardModel::B;
    throw ValidationError("unknown reward model '" + s + "' (expected A or B)");
}

double Arm::max_reward() const
{
    double m = 0.0;
    if (r_passive.size() > 0)
        m = std::max(m, r_passive.maxCoeff());
    if (r_active.size() > 0)
        m = std::max(m, r_active.maxCoeff());
    return m;
}

double BanditInstance::reward_bound() const
{
    if (r_max >= 0.0)
        return r_max;
    double m = 0.0;
    for (const auto& arm : arms)
        m = std::max(m, arm.max_reward());
    return m;
}

int BanditInstance::total_states() const
{
    int total = 0;
    for (const auto& arm : arms)
        total += arm.num_states();
    return total;
}

std::vector<std::string> stochastic_defects(const Matrix& p)
{
    std::vector<std::string> out;
    if (p.rows() != p.cols() || p.rows() == 0) {
        out.push_back(fmt("matrix is %ldx%ld, expected non-empty square", long(p.rows()), long(p.cols())));
        return out;
    }
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < p.cols(); ++c) {
            const double v = p(r, c);
            if (!std::isfinite(v))
                out.push_back(fmt("row %ld: non-finite entry at column %ld", long(r), long(c)));
            else if (v < 0.0)
                out.push_back(fmt("row %ld: negative entry %.3g at column %ld", long(r), v, long(c)));
            sum += v;
        }
        if (std::abs(sum - 1.0) > kStochasticTolerance)
            out.push_back(fmt("row %ld: sum %.17g, deficit %.3g", long(r), sum, 1.0 - sum));
    }
    return out;
}

void require_stochastic(const Matrix& p, const char* what)
{
    auto defects = stochastic_defects(p);
    if (!defects.empty())
        throw ValidationError(std::string(what) + " is not row-stochastic: " + defects.front());
}

std::vector<std::string> validate_arm(const Arm& arm, double r_max, int arm_index)
{
    std::vector<std::string> out;
    const auto S = arm.r_passive.size();
    if (S < 1) {
        out.push_back(fmt("arm %d: empty state space", arm_index));
        return out;
    }
    if (arm.r_active.size() != S || arm.p_passive.rows() != S || arm.p_active.rows() != S) {
        out.push_back(fmt("arm %d: inconsistent dimensions", arm_index));
        return out;
    }
    const Matrix* mats[2] = {&arm.p_passive, &arm.p_active};
    const char* names[2] = {"p_passive", "p_active"};
    for (int a = 0; a < 2; ++a)
        for (const auto& d : stochastic_defects(*mats[a]))
            out.push_back(fmt("arm %d: %s ", arm_index, names[a]) + d);

    const Vector* rewards[2] = {&arm.r_passive, &arm.r_active};
    const char* rnames[2] = {"r_passive", "r_active"};
    for (int a = 0; a < 2; ++a)
        for (Eigen::Index s = 0; s < S; ++s) {
            const double v = (*rewards[a])(s);
            if (!std::isfinite(v) || v < 0.0 || v > r_max)
                out.push_back(fmt("arm %d: %s[%ld] = %.17g outside [0, %.17g]", arm_index, rnames[a], long(s), v, r_max));
        }
    return out;
}

std::vector<std::string> validate(const BanditInstance& instance)
{
    std::vector<std::string> out;
    const int n = instance.num_arms();
    if (n < 1)
        out.push_back("instance has no arms");
    if (instance.budget < 1 || instance.budget > n)
        out.push_back(fmt("budget m = %d outside [1, %d]", instance.budget, n));
    const double r_max = instance.reward_bound();
    for (int i = 0; i < n; ++i) {
        auto arm_out = validate_arm(instance.arms[i], r_max, i);
        out.insert(out.end(), arm_out.begin(), arm_out.end());
        if (instance.reward_model == RewardModel::B) {
            const auto& rp = instance.arms[i].r_passive;
            for (Eigen::Index s = 0; s < rp.size(); ++s)
                if (rp(s) != 0.0)
                    out.push_back(fmt("arm %d: model B requires r_passive[%ld] = 0, got %.17g", i, long(s), rp(s)));
        }
    }
    return out;
}

bool joint_state_valid(const BanditInstance& instance, const JointState& state)
{
    if (static_cast<int>(state.states.size()) != instance.num_arms())
        return false;
    for (int i = 0; i < instance.num_arms(); ++i)
        if (state.states[i] < 0 || state.states[i] >= instance.arms[i].num_states())
            return false;
    return true;
}

double ergodicity_coefficient(const Matrix& p)
{
    require_stochastic(p, "ergodicity_coefficient input");
    double min_overlap = 1.0;
    for (Eigen::Index s = 0; s < p.rows(); ++s)
        for (Eigen::Index t = s + 1; t < p.rows(); ++t)
            min_overlap = std::min(min_overlap, row_overlap(p, s, p, t));
    return std::clamp(1.0 - min_overlap, 0.0, 1.0);
}

double arm_contraction_factor(const Arm& arm)
{
    require_stochastic(arm.p_passive, "p_passive");
    require_stochastic(arm.p_active, "p_active");
    const int S = arm.num_states();
    double min_overlap = 1.0;
    for (int row = 0; row < 2 * S; ++row)
        for (int other = row + 1; other < 2 * S; ++other)
            min_overlap = std::min(min_overlap, row_overlap(arm.transitions(row / S), row % S,
                                                            arm.transitions(other / S), other % S));
    return std::clamp(1.0 - min_overlap, 0.0, 1.0);
}

double joint_minorization_lower_bound(const BanditInstance& instance)
{
    double bound = 1.0;
    for (const auto& arm : instance.arms)
        bound *= 1.0 - arm_contraction_factor(arm);
    return bound;
}

}  // namespace rblab
