#pragma once

#include "arm_model.hpp"

#include <optional>
#include <set>
#include <vector>

namespace rblab {

/// Per-arm Whittle index vectors, w^i(s).
struct WhittleTable {
    std::vector<Vector> indices;

    double index(int arm, int state) const { return indices[arm](state); }
};

/// States held passive by the policy "passive on X, active elsewhere".
struct PassiveSetPolicy {
    std::set<int> passive_states;
};

struct WhittleOptions {
    /// State at which bias and activity-bias vectors are pinned to zero.
    int reference_state = 0;
    /// |difference of (J_N + N)(s)| must exceed this for s to count as changed.
    double activity_tolerance = 1e-9;
    /// Candidates within this distance of the minimum join the same batch.
    double tie_tolerance = 1e-9;
};

/// Per-iteration trace of the adaptive-greedy computation.
struct WhittleTrace {
    std::vector<double> thresholds;           ///< xi* per iteration
    std::vector<std::vector<int>> batches;    ///< states assigned per iteration
};

/// Adaptive-greedy index computation. Throws NumericalError when no candidate
/// changes activity ("degenerate") or a policy on the way is multichain.
Vector whittle_indices(const Arm& arm, const WhittleOptions& options = {}, WhittleTrace* trace = nullptr);

WhittleTable whittle_table(const BanditInstance& instance, const WhittleOptions& options = {});

struct BisectionOptions {
    int iterations = 60;
    double rvi_tolerance = 1e-10;
    /// Q(s,0) >= Q(s,1) - tie counts as passive.
    double tie_tolerance = 1e-9;
};

/// Smallest charge in [lo, hi] at which `state` is passive in the charged
/// single-arm problem; bisection over relative-value-iteration probes.
double whittle_bisection_oracle(const Arm& arm, int state, double lo, double hi, const BisectionOptions& options = {});

/// Default oracle bracket [-R_max - 1, 2 R_max + 1].
std::pair<double, double> default_bracket(const Arm& arm, double r_max);

/// Passive set of the charged problem at the given charge.
std::vector<bool> passive_set(const Arm& arm, double charge, const BisectionOptions& options = {});

struct IndexabilityReport {
    bool indexable = true;
    std::optional<double> lambda_before;
    std::optional<double> lambda_after;
    std::optional<int> state;
};

/// Checks that passive sets grow by inclusion along a sorted charge grid.
IndexabilityReport indexability_check(const Arm& arm, const std::vector<double>& grid,
                                      const BisectionOptions& options = {});

std::vector<double> uniform_grid(double lo, double hi, int points);

/// Activates the m arms with largest index at their current state; ties go
/// to the smaller arm id.
std::vector<int> select_actions(const WhittleTable& tables, const JointState& state, int m);

/// Same rule over an explicit priority vector (one value per arm).
std::vector<int> top_m_actions(const std::vector<double>& priority, int m);

}  // namespace rblab
