#pragma once

#include "bayes.hpp"
#include "simulator.hpp"
#include "whittle.hpp"

#include <cstdint>
#include <span>

namespace rblab {

struct EpisodeDecision {
    bool end = false;
    EpisodeTrigger trigger = EpisodeTrigger::HorizonEnd;
};

/// Stopping rule: the episode started at t_k ends at time t when
/// t - t_k > T_prev, or when some visit counter more than doubled since t_k.
/// The doubling label wins when both clauses hold.
EpisodeDecision episode_should_end(std::int64_t t, std::int64_t t_k, std::int64_t T_prev,
                                   std::span<const std::int64_t> visits_now,
                                   std::span<const std::int64_t> visits_at_tk);

/// 2 sqrt(S_total T ln T).
double episode_count_bound(int total_states, std::int64_t T);

struct TsdeOptions {
    WhittleOptions whittle;
    /// Re-check posterior conservation after every step.
    bool check_posterior = false;
    /// Throw InvariantViolation when the episode-count bound is exceeded.
    bool enforce_episode_bound = true;
};

/// Thompson sampling with dynamic episodes: each episode plays the Whittle
/// policy of one posterior sample. Deterministic in (prior, env, seed, T).
RunTrace run_tsde(Environment& env, const LearnerSpec& spec, PosteriorState posterior, std::int64_t T,
                  std::uint64_t seed, const TsdeOptions& options = {}, PosteriorState* final_posterior = nullptr);

/// Structural episode checks: T_k <= T_{k-1} + 1, sum T_k = T, K_T bound.
std::vector<std::string> check_episode_invariants(const RunTrace& trace, int total_states);

}  // namespace rblab
