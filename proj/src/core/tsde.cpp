#include "tsde.hpp"

#include <cmath>
#include <cstdio>

namespace rblab {

EpisodeDecision episode_should_end(std::int64_t t, std::int64_t t_k, std::int64_t T_prev,
                                   std::span<const std::int64_t> visits_now,
                                   std::span<const std::int64_t> visits_at_tk)
{
    if (visits_now.size() != visits_at_tk.size())
        throw ValidationError("episode_should_end: visit vectors differ in size");
    for (std::size_t k = 0; k < visits_now.size(); ++k)
        if (visits_now[k] > 2 * visits_at_tk[k])
            return {true, EpisodeTrigger::DoublingRule};
    if (t - t_k > T_prev)
        return {true, EpisodeTrigger::LengthRule};
    return {false, EpisodeTrigger::HorizonEnd};
}

double episode_count_bound(int total_states, std::int64_t T)
{
    const double t = static_cast<double>(T);
    return 2.0 * std::sqrt(static_cast<double>(total_states) * t * std::log(t));
}

namespace {

WhittleTable table_for_sample(const LearnerSpec& spec, const std::vector<ArmDynamics>& dyn,
                              const WhittleOptions& options)
{
    WhittleTable table;
    for (int i = 0; i < spec.num_arms(); ++i)
        table.indices.push_back(whittle_indices(spec.make_arm(i, dyn[i].p_passive, dyn[i].p_active), options));
    return table;
}

}  // namespace

std::vector<std::string> check_episode_invariants(const RunTrace& trace, int total_states)
{
    std::vector<std::string> out;
    char buf[200];
    std::int64_t total = 0;
    for (std::size_t k = 0; k < trace.episodes.size(); ++k) {
        const auto& e = trace.episodes[k];
        total += e.length;
        const std::int64_t prev = k == 0 ? 0 : trace.episodes[k - 1].length;
        if (e.length > prev + 1) {
            std::snprintf(buf, sizeof(buf), "episode %d has length %lld > previous length %lld + 1", e.k,
                          static_cast<long long>(e.length), static_cast<long long>(prev));
            out.emplace_back(buf);
        }
    }
    if (total != trace.horizon()) {
        std::snprintf(buf, sizeof(buf), "episode lengths sum to %lld, horizon is %lld", static_cast<long long>(total),
                      static_cast<long long>(trace.horizon()));
        out.emplace_back(buf);
    }
    // ln T vanishes at T = 1, where the bound carries no information.
    if (trace.horizon() >= 2) {
        const double bound = episode_count_bound(total_states, trace.horizon());
        if (static_cast<double>(trace.episodes.size()) > bound) {
            std::snprintf(buf, sizeof(buf), "K_T = %zu exceeds 2 sqrt(S T ln T) = %.3f", trace.episodes.size(), bound);
            out.emplace_back(buf);
        }
    }
    return out;
}

RunTrace run_tsde(Environment& env, const LearnerSpec& spec, PosteriorState posterior, std::int64_t T,
                  std::uint64_t seed, const TsdeOptions& options, PosteriorState* final_posterior)
{
    const int n = env.num_arms();
    if (spec.num_arms() != n || posterior.num_arms() != n)
        throw ValidationError("run_tsde: environment, LearnerSpec and posterior disagree on n");
    if (T < 1)
        throw ValidationError("run_tsde: horizon must be positive");

    RunTrace trace;
    trace.algorithm = "rb-tsde";
    trace.num_arms = n;
    trace.states.reserve(static_cast<std::size_t>(T) * n);
    trace.actions.reserve(static_cast<std::size_t>(T) * n);

    WhittleTable table;
    std::vector<std::int64_t> visits_at_start;
    std::int64_t episode_start = 1;
    std::int64_t previous_length = 0;

    auto start_episode = [&](std::int64_t t) {
        EpisodeRecord rec;
        rec.k = static_cast<int>(trace.episodes.size()) + 1;
        rec.start = t;
        rec.sample_seed = derive_seed(seed, static_cast<std::uint64_t>(rec.k));
        Rng rng = make_rng(rec.sample_seed);
        try {
            table = table_for_sample(spec, posterior.sample_model(rng), options.whittle);
        } catch (const NumericalError& first) {
            Rng retry = make_rng(derive_seed(rec.sample_seed, stream::resample));
            rec.resamples = 1;
            try {
                table = table_for_sample(spec, posterior.sample_model(retry), options.whittle);
            } catch (const NumericalError& second) {
                throw NumericalError("rb-tsde: Whittle computation failed twice at episode " +
                                     std::to_string(rec.k) + " (t = " + std::to_string(t) + "): " + first.what() +
                                     " / " + second.what());
            }
        }
        visits_at_start = posterior.visit_vector();
        episode_start = t;
        trace.episodes.push_back(rec);
    };

    JointState state = env.reset();
    double cumulative = 0.0;
    for (std::int64_t t = 1; t <= T; ++t) {
        if (t == 1) {
            start_episode(t);
        } else {
            const auto decision =
                episode_should_end(t, episode_start, previous_length, posterior.visit_vector(), visits_at_start);
            if (decision.end) {
                auto& last = trace.episodes.back();
                last.length = t - episode_start;
                last.trigger = decision.trigger;
                previous_length = last.length;
                start_episode(t);
            }
        }

        const auto actions = select_actions(table, state, spec.budget);
        const auto res = env.step(actions);
        for (int i = 0; i < n; ++i)
            posterior.observe(i, state.states[i], actions[i], res.next_states[i]);
        if (options.check_posterior) {
            auto problems = posterior.check_invariants();
            if (!problems.empty())
                throw InvariantViolation("rb-tsde posterior at t = " + std::to_string(t) + ": " + problems.front());
        }

        trace.states.insert(trace.states.end(), state.states.begin(), state.states.end());
        trace.actions.insert(trace.actions.end(), actions.begin(), actions.end());
        cumulative += res.reward;
        trace.rewards.push_back(res.reward);
        trace.cumulative_reward.push_back(cumulative);
        trace.episode.push_back(trace.episodes.back().k);
        state.states = res.next_states;
    }
    auto& last = trace.episodes.back();
    last.length = T + 1 - episode_start;
    last.trigger = EpisodeTrigger::HorizonEnd;

    int total_states = 0;
    for (int S : spec.num_states)
        total_states += S;
    auto problems = check_episode_invariants(trace, total_states);
    if (!problems.empty() && options.enforce_episode_bound)
        throw InvariantViolation("rb-tsde: " + problems.front());
    if (final_posterior)
        *final_posterior = std::move(posterior);
    return trace;
}

}  // namespace rblab
