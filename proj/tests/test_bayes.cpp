#include "bayes.hpp"
#include "errors.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace rblab;

TEST_CASE("Dirichlet draws have the analytic mean and variance")
{
    Rng rng = make_rng(51);
    Vector alpha(4);
    alpha << 0.5, 1.0, 2.0, 4.5;
    const double a0 = alpha.sum();
    const int draws = 40000;
    Vector sum = Vector::Zero(4), sq = Vector::Zero(4);
    for (int k = 0; k < draws; ++k) {
        const Vector x = sample_dirichlet(alpha, rng);
        CHECK(std::abs(x.sum() - 1.0) <= 1e-12);
        CHECK(x.minCoeff() >= 0.0);
        sum += x;
        sq += x.cwiseProduct(x);
    }
    for (int i = 0; i < 4; ++i) {
        const double mean = alpha(i) / a0;
        const double var = alpha(i) * (a0 - alpha(i)) / (a0 * a0 * (a0 + 1.0));
        const double m = sum(i) / draws;
        CHECK(std::abs(m - mean) <= 5.0 * std::sqrt(var / draws));
        CHECK(sq(i) / draws - m * m == doctest::Approx(var).epsilon(0.05));
    }
}

TEST_CASE("observations add to the Dirichlet counts")
{
    auto post = PosteriorState::init_prior({3, 2}, 0.5);
    post.observe(0, 1, 0, 2);
    post.observe(0, 1, 0, 2);
    post.observe(0, 1, 1, 0);
    post.observe(1, 0, 0, 1);
    CHECK(post.visits(0, 1, 0) == 2);
    CHECK(post.visits(0, 1, 1) == 1);
    CHECK(post.transitions(0, 1, 0, 2) == 2);
    CHECK(post.observed_steps(0) == 3);
    const Vector row = post.counts_row(0, 1, 0);
    CHECK(row(0) == 0.5);
    CHECK(row(2) == 2.5);
    const Vector mean = post.posterior_mean(0, 1, 0);
    CHECK(mean(2) == doctest::Approx(2.5 / 3.5));
    const auto emp = post.empirical_row(0, 1, 0);
    CHECK(emp.visited);
    CHECK(emp.row(2) == 1.0);
    CHECK_FALSE(post.empirical_row(0, 2, 0).visited);
    CHECK(post.check_invariants().empty());
    CHECK_THROWS_AS(post.observe(1, 2, 0, 0), ValidationError);
}

TEST_CASE("prior rows can only change before data arrives")
{
    auto post = PosteriorState::init_prior({2});
    Vector row(2);
    row << 3.0, 1.0;
    post.set_prior_row(0, 0, 0, row);
    CHECK(post.posterior_mean(0, 0, 0)(0) == doctest::Approx(0.75));
    post.observe(0, 0, 0, 1);
    CHECK_THROWS_AS(post.set_prior_row(0, 0, 0, row), ValidationError);
    post.set_prior_row(0, 1, 0, row);
}

TEST_CASE("passive-only posteriors return the known active matrices")
{
    Rng rng = make_rng(52);
    const Matrix known = testutil::random_stochastic(3, rng);
    auto post = PosteriorState::init_prior({3}, 1.0, LearnMode::PassiveOnly, {known});
    post.observe(0, 0, 1, 2);
    const auto dyn = post.sample_model(rng);
    CHECK(dyn[0].p_active == known);
    CHECK(post.visits(0, 0, 1) == 1);
    CHECK_THROWS(PosteriorState::init_prior({3}, 1.0, LearnMode::PassiveOnly, {}));
}

TEST_CASE("posterior samples concentrate around the data")
{
    Rng rng = make_rng(53);
    auto post = PosteriorState::init_prior({2});
    for (int k = 0; k < 20000; ++k)
        post.observe(0, 0, 0, k % 4 == 0 ? 1 : 0);
    const auto dyn = post.sample_model(rng);
    CHECK(dyn[0].p_passive(0, 1) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("posterior JSON round trip")
{
    auto post = PosteriorState::init_prior({2, 3}, 2.0);
    post.observe(1, 2, 1, 0);
    post.observe(0, 0, 0, 1);
    const auto back = PosteriorState::from_json(post.to_json());
    CHECK(back.to_json() == post.to_json());
    CHECK(back.visits(1, 2, 1) == 1);
}
