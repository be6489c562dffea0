#include "envgen.hpp"
#include "errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace rblab;

namespace {

using i128 = __int128;

// Exact integer image of an entry on the 2^-52 grid; fails if off grid.
std::int64_t grid_units(double x)
{
    const double scaled = std::ldexp(x, 52);
    REQUIRE(scaled == std::floor(scaled));
    return static_cast<std::int64_t>(scaled);
}

}  // namespace

TEST_CASE("monotone matrices are exact on the dyadic grid")
{
    Rng rng = make_rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
        const int S = 2 + k % 12;
        const double d = k % 10 == 0 ? 0.0 : u(rng);
        const Matrix p = random_monotone_matrix(S, d, rng);
        std::vector<std::vector<i128>> units(S, std::vector<i128>(S));
        for (int i = 0; i < S; ++i) {
            i128 sum = 0;
            for (int j = 0; j < S; ++j) {
                units[i][j] = grid_units(p(i, j));
                CHECK(units[i][j] >= 0);
                sum += units[i][j];
            }
            CHECK(sum == (i128{1} << 52));
        }
        for (int i = 0; i + 1 < S; ++i)
            for (int j = 0; j < S; ++j) {
                i128 a = 0, b = 0;
                for (int y = j; y < S; ++y) {
                    a += units[i][y];
                    b += units[i + 1][y];
                }
                CHECK(a <= b);
            }
        const double slack = 1e-15;
        CHECK(p(0, 0) >= 1.0 - d - slack);
        for (int i = 1; i < S; ++i)
            CHECK(p(i, S - 1) - p(i - 1, S - 1) <= d + slack);
        CHECK(is_exactly_stochastic(p));
        CHECK(is_stochastically_monotone(p));
    }
}

TEST_CASE("d = 0 gives the absorbing-at-first-state matrix")
{
    Rng rng = make_rng(42);
    const Matrix p = random_monotone_matrix(4, 0.0, rng);
    for (int i = 0; i < 4; ++i)
        CHECK(p(i, 0) == 1.0);
}

TEST_CASE("exact sum sign")
{
    CHECK(exact_sum_sign({}) == 0);
    CHECK(exact_sum_sign({1e16, 1.0, -1e16}) == 1);
    CHECK(exact_sum_sign({1e16, -1.0, -1e16}) == -1);
    CHECK(exact_sum_sign({0.1, 0.2, -0.3}) == 1);  // decimal literals round unevenly
    CHECK(exact_sum_sign({0.5, 0.25, -0.75}) == 0);
    CHECK(exact_sum_sign({1e300, -1e-300, -1e300}) == -1);

    Rng rng = make_rng(43);
    std::uniform_int_distribution<std::int64_t> u(-(std::int64_t{1} << 52), std::int64_t{1} << 52);
    for (int k = 0; k < 500; ++k) {
        std::vector<double> terms;
        i128 total = 0;
        for (int j = 0; j < 8; ++j) {
            const std::int64_t v = u(rng);
            const int shift = j % 4;  // mixed magnitudes, still exact
            terms.push_back(std::ldexp(static_cast<double>(v), shift * 20 - 52));
            total += static_cast<i128>(v) << (shift * 20);
        }
        CHECK(exact_sum_sign(terms) == (total > 0) - (total < 0));
    }
}

TEST_CASE("near-stochastic rows fail the exact check")
{
    Matrix p(2, 2);
    p << 0.1, 0.9, 0.3, 0.7;
    // 0.1 + 0.9 rounds to 1 but is not exactly 1.
    CHECK(exact_sum_sign({0.1, 0.9, -1.0}) != 0);
    CHECK_FALSE(is_exactly_stochastic(p));
    Matrix q(2, 2);
    q << 0.75, 0.25, 0.5, 0.5;
    CHECK(is_exactly_stochastic(q));
    Matrix r(2, 2);
    r << 0.5, 0.5, 0.75, 0.25;
    CHECK_FALSE(is_stochastically_monotone(r));
}

TEST_CASE("reference environments")
{
    Rng rng = make_rng(44);
    const auto a = make_environment(EnvironmentKind::A, 3, 10, rng);
    CHECK(a.num_arms() == 3);
    CHECK(a.budget == 1);
    CHECK(a.reward_model == RewardModel::A);
    CHECK(validate(a).empty());
    for (const auto& arm : a.arms) {
        CHECK(arm.r_passive(0) == 81.0);
        CHECK(arm.r_passive(9) == 0.0);
        CHECK(arm.r_active(4) == 40.5);
        for (int s = 0; s < 10; ++s)
            CHECK(arm.p_active(s, 0) == 1.0);
        CHECK(arm.p_passive(0, 0) >= 1.0 - 0.05);
        CHECK(is_stochastically_monotone(arm.p_passive));
    }
    const auto b = make_environment(EnvironmentKind::B, 2, 5, rng);
    CHECK(b.reward_model == RewardModel::B);
    CHECK(validate(b).empty());
    CHECK(b.arms[0].r_passive.isZero());
    CHECK(b.arms[0].r_active(3) == 9.0);
}

TEST_CASE("generator argument checks")
{
    Rng rng = make_rng(45);
    CHECK_THROWS_AS(random_monotone_matrix(1, 0.1, rng), ValidationError);
    CHECK_THROWS_AS(random_monotone_matrix(3, 1.5, rng), ValidationError);
    CHECK_THROWS_AS(environment_kind_from_string("C"), ValidationError);
}
