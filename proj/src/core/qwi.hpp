#pragma once

#include "simulator.hpp"

#include <cstdint>
#include <vector>

namespace rblab {

struct QwiOptions {
    double step_fast = 0.3;  ///< Q-value learning rate a
    double step_slow = 0.1;  ///< index learning rate b
    double epsilon = 0.1;    ///< probability of a uniformly random feasible action
    double initial_index = 0.0;
    int reference_state = 0;  ///< Q(reference, 0; anchor) is subtracted as the gain estimate
    /// Index estimates are projected onto [-c (R_max + 1), c (R_max + 1)]; 0 disables.
    double index_bound_factor = 10.0;
};

/// Per-arm tables: one S x 2 Q-table per anchor state plus the index
/// estimate lambda(anchor).
struct QwiArmState {
    int S = 0;
    std::vector<double> q;  ///< [anchor][state][action]
    std::vector<double> index;
    double index_bound = 0.0;  ///< 0 = unbounded

    double& at(int anchor, int state, int action) { return q[(static_cast<std::size_t>(anchor) * S + state) * 2 + action]; }
    double at(int anchor, int state, int action) const
    {
        return q[(static_cast<std::size_t>(anchor) * S + state) * 2 + action];
    }
};

struct QwiState {
    std::vector<QwiArmState> arms;
    QwiOptions options;

    static QwiState init(const LearnerSpec& spec, const QwiOptions& options);
    /// Index estimate of every arm at its current state.
    std::vector<double> priorities(const JointState& state) const;
};

/// One learning step for arm i after observing (s, a, r, s_next). Fast: relative
/// Q-learning with charge lambda(anchor) per activation for every anchor.
/// Slow: lambda(s) moves toward Q(s,1;s) = Q(s,0;s).
void qwi_update(QwiArmState& arm, const QwiOptions& options, int state, int action, double reward, int next_state);

/// Two-timescale Q-learning index baseline; trace schema matches rb-tsde.
RunTrace run_qwi(Environment& env, const LearnerSpec& spec, std::int64_t T, std::uint64_t seed,
                 const QwiOptions& options = {}, QwiState* final_state = nullptr);

}  // namespace rblab
