#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "restore/formulation.hpp"
#include "restore/milp.hpp"
#include "restore/netmodel.hpp"
#include "restore/scenario.hpp"
#include "restore/state.hpp"

namespace restore::rolling {

/// The step sequence 0..|T| split into an optional short leading segment of
/// length beta followed by num_full_segments segments of length mu.
struct HorizonPlan {
    int total_steps = 0;
    int mu = 1;
    int beta = 0;
    int num_full_segments = 0;
    std::vector<std::pair<int, int>> segments;  // inclusive [first, last]
};

/// beta = (total_steps+1) mod mu, L = (total_steps+1) / mu.
HorizonPlan partition_horizon(int total_steps, int mu);

/// Allowed per-segment reward shortfall: eps = min(2*alpha*mu / delta_d, cap).
/// Throws ModelError when delta_d <= 0 (unless alpha == 0, which gives 0).
double compute_epsilon(double alpha, int mu, double delta_d, double cap = 0.5);

/// Blocks that are de-energized but reachable from a live feeder source
/// through the block graph without crossing a faulted block.
std::vector<int> restorable_blocks(const net::NetworkModel& net,
                                   const scenario::IsolationResult& iso);

/// Default shortfall scale: the smallest cold-pickup-scaled demand among the
/// initially islanded restorable blocks; 0 when none exist.
double default_delta_d(const net::NetworkModel& net, const scenario::ScenarioEngine& eng);

struct RollingConfig {
    int mu = 3;
    int total_steps = 20;
    double alpha = 2.0;
    double epsilon = -1.0;   // < 0: derive via compute_epsilon(alpha, mu, delta_d)
    double delta_d = -1.0;   // < 0: derive via default_delta_d
    double epsilon_cap = 0.5;
    /// Tiny per-step reward weight that prefers acting early among plans of
    /// equal total; see WindowSpec::earliness.
    double earliness = 1e-7;
    /// Planning horizon cap for the open-loop baseline (its one monolithic
    /// model grows cubically with the horizon).
    int one_shot_horizon_cap = 4;
    milp::SolveOptions solver;
    double v0 = 1.0;
    double v_min = 0.95;
    double v_max = 1.05;
};

struct StepRecord {
    int step = 0;  // decision taken at this step; effects measured at step+1
    StepDecision decision;
    std::string open_id, close_id;          // switch ids, empty when unused
    std::vector<int> restored_blocks;       // realized this step
    double restored_kw = 0.0;               // measured demand of those blocks
    double planned_reward = 0.0;            // window accounting for this step
    double window_objective = 0.0;
    int window_length = 0;
    net::Topology topo_after;
    std::vector<double> transformer_util, feeder_util;  // realized fractions
    double max_transformer_util = 0.0, max_feeder_util = 0.0;
    int violations = 0;                     // ground-truth physics violations
    std::vector<int> der_events;            // blocks whose DER came online
};

struct SegmentInfo {
    int first = 0, last = 0;
    double bound = 0.0;    // F+, full-segment optimum at entry
    double epsilon = 0.0;  // value in force when the segment closed
    double accrued = 0.0;  // planned reward banked over the segment
};

struct RelaxationEvent {
    int step = 0;
    double epsilon_before = 0.0, epsilon_after = 0.0;
};

struct RestorationLog {
    std::string strategy;  // "safeguarded" | "traditional" | "one_shot"
    std::uint64_t seed = 0;
    double epsilon = 0.0;  // initial value
    std::vector<StepRecord> steps;
    std::vector<SegmentInfo> segments;          // safeguarded only
    std::vector<RelaxationEvent> relaxations;   // safeguarded only
    double total_restored_kw = 0.0;
    int steps_used = 0;      // last step with any action or restoration, +1
    bool converged = true;   // no restorable islanded load left at the end
    int violation_count = 0;
    double max_transformer_util = 0.0, max_feeder_util = 0.0;
};

/// Full-segment optimum from the segment-entry state; no safeguard row.
double compute_segment_bound(const net::NetworkModel& net, const SystemState& state,
                             const formulation::LoadForecast& forecast, int seg_first,
                             int seg_last, const std::set<int>& faulted,
                             const RollingConfig& cfg);

RestorationLog run_safeguarded(const net::NetworkModel& net, scenario::ScenarioEngine& eng,
                               const RollingConfig& cfg);
RestorationLog run_traditional(const net::NetworkModel& net, scenario::ScenarioEngine& eng,
                               const RollingConfig& cfg);
RestorationLog run_one_shot(const net::NetworkModel& net, scenario::ScenarioEngine& eng,
                            const RollingConfig& cfg);

std::string log_to_json(const net::NetworkModel& net, const RestorationLog& log);

}  // namespace restore::rolling
