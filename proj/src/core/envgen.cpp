#include "envgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace rblab {

namespace {

constexpr int kGridBits = 52;
constexpr std::int64_t kUnit = std::int64_t{1} << kGridBits;

std::int64_t draw(Rng& rng, std::int64_t lo, std::int64_t hi)
{
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

// Shewchuk's two-sum; a + b == s + e exactly.
void two_sum(double a, double b, double& s, double& e)
{
    s = a + b;
    const double bv = s - a;
    const double av = s - bv;
    e = (a - av) + (b - bv);
}

}  // namespace

EnvironmentKind environment_kind_from_string(const std::string& s)
{
    if (s == "A" || s == "a")
        return EnvironmentKind::A;
    if (s == "B" || s == "b")
        return EnvironmentKind::B;
    throw ValidationError("unknown environment kind '" + s + "' (expected A or B)");
}

const char* to_string(EnvironmentKind k) { return k == EnvironmentKind::A ? "A" : "B"; }

Matrix random_monotone_matrix(int S, double d, Rng& rng)
{
    if (S < 2)
        throw ValidationError("random_monotone_matrix: S must be at least 2");
    if (!(d >= 0.0 && d <= 1.0))
        throw ValidationError("random_monotone_matrix: d must lie in [0, 1]");

    const auto spread = static_cast<std::int64_t>(std::llround(std::ldexp(d, kGridBits)));
    std::vector<std::vector<std::int64_t>> p(S, std::vector<std::int64_t>(S, 0));

    // First row: P_11 in [1 - d, 1], then each later entry uniform on what is
    // left. Any remainder goes to the first column, as for the other rows.
    p[0][0] = draw(rng, kUnit - spread, kUnit);
    std::int64_t left = kUnit - p[0][0];
    for (int j = 1; j < S; ++j) {
        p[0][j] = draw(rng, 0, left);
        left -= p[0][j];
    }
    p[0][0] += left;

    // Last column ascends by at most d per row.
    for (int i = 1; i < S; ++i)
        p[i][S - 1] = draw(rng, p[i - 1][S - 1], std::min(kUnit, p[i - 1][S - 1] + spread));

    // Remaining entries backwards per row between the monotonicity floor and
    // the spread / mass ceiling; the first column takes what remains.
    std::vector<std::int64_t> prev_tail(S + 1, 0);
    for (int j = S - 1; j >= 0; --j)
        prev_tail[j] = prev_tail[j + 1] + p[0][j];
    for (int i = 1; i < S; ++i) {
        std::vector<std::int64_t> tail(S + 1, 0);
        tail[S - 1] = p[i][S - 1];
        for (int j = S - 2; j >= 1; --j) {
            const std::int64_t lb = std::max<std::int64_t>(0, prev_tail[j] - tail[j + 1]);
            const std::int64_t ub = std::max(lb, std::min(lb + spread, kUnit - tail[j + 1]));
            p[i][j] = draw(rng, lb, ub);
            tail[j] = tail[j + 1] + p[i][j];
        }
        p[i][0] = kUnit - tail[1];
        tail[0] = kUnit;
        prev_tail = std::move(tail);
    }

    Matrix out(S, S);
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
            out(i, j) = std::ldexp(static_cast<double>(p[i][j]), -kGridBits);
    return out;
}

int exact_sum_sign(const std::vector<double>& terms)
{
    // Nonoverlapping expansion, smallest component first.
    std::vector<double> expansion;
    for (double t : terms) {
        double q = t;
        std::vector<double> grown;
        grown.reserve(expansion.size() + 1);
        for (double e : expansion) {
            double s, err;
            two_sum(q, e, s, err);
            if (err != 0.0)
                grown.push_back(err);
            q = s;
        }
        if (q != 0.0)
            grown.push_back(q);
        expansion = std::move(grown);
    }
    if (expansion.empty())
        return 0;
    return expansion.back() > 0.0 ? 1 : -1;
}

bool is_exactly_stochastic(const Matrix& p)
{
    if (p.rows() != p.cols())
        return false;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        std::vector<double> terms{-1.0};
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            if (!(p(i, j) >= 0.0))
                return false;
            terms.push_back(p(i, j));
        }
        if (exact_sum_sign(terms) != 0)
            return false;
    }
    return true;
}

bool is_stochastically_monotone(const Matrix& p)
{
    const auto S = p.rows();
    // Comparing consecutive rows suffices: the relation is transitive.
    for (Eigen::Index i = 0; i + 1 < S; ++i)
        for (Eigen::Index j = 0; j < S; ++j) {
            std::vector<double> terms;
            for (Eigen::Index y = j; y < S; ++y) {
                terms.push_back(p(i, y));
                terms.push_back(-p(i + 1, y));
            }
            if (exact_sum_sign(terms) > 0)
                return false;
        }
    return true;
}

Vector environment_passive_rewards(EnvironmentKind kind, int S)
{
    Vector r(S);
    const double top = static_cast<double>(S - 1) * (S - 1);
    for (int s = 0; s < S; ++s)
        r(s) = kind == EnvironmentKind::A ? top - static_cast<double>(s) * s : 0.0;
    return r;
}

Vector environment_active_rewards(EnvironmentKind kind, int S)
{
    Vector r(S);
    const double top = static_cast<double>(S - 1) * (S - 1);
    for (int s = 0; s < S; ++s)
        r(s) = kind == EnvironmentKind::A ? 0.5 * top : static_cast<double>(s) * s;
    return r;
}

Matrix reset_matrix(int S)
{
    Matrix m = Matrix::Zero(S, S);
    m.col(0).setOnes();
    return m;
}

Arm make_reset_arm(EnvironmentKind kind, int S, double d, Rng& rng)
{
    Arm arm;
    arm.p_passive = random_monotone_matrix(S, d, rng);
    arm.p_active = reset_matrix(S);
    arm.r_passive = environment_passive_rewards(kind, S);
    arm.r_active = environment_active_rewards(kind, S);
    return arm;
}

BanditInstance make_environment(EnvironmentKind kind, int n, int S, Rng& rng)
{
    if (n < 1)
        throw ValidationError("make_environment: n must be at least 1");
    if (S < 2)
        throw ValidationError("make_environment: S must be at least 2");
    BanditInstance inst;
    inst.budget = 1;
    inst.reward_model = kind == EnvironmentKind::A ? RewardModel::A : RewardModel::B;
    inst.r_max = static_cast<double>(S - 1) * (S - 1);
    const double d = 0.5 / S;
    for (int i = 0; i < n; ++i)
        inst.arms.push_back(make_reset_arm(kind, S, d, rng));
    return inst;
}

}  // namespace rblab
