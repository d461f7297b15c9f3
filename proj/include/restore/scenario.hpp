#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "restore/formulation.hpp"
#include "restore/netmodel.hpp"
#include "restore/state.hpp"

namespace restore::scenario {

/// A permanent fault on one line, present from step 0. Both endpoint blocks
/// belong to the faulted area (for a solid line that is a single block).
struct FaultEvent {
    int line = -1;
};

/// Behind-the-meter DER population of one block. The unit trips when the
/// block loses power and reconnects `reconnect_delay_steps` after the block
/// is re-energized, offsetting `offset_fraction` of the block's net demand.
struct DerUnit {
    int block = -1;
    double offset_fraction = 0.0;   // in (0, 0.5]
    int reconnect_delay_steps = 6;  // >= 6
};

struct ScenarioConfig {
    int num_faults = 1;
    double clpu_factor = 2.0;   // cold-pickup surge multiplier S, >= 1
    double clpu_decay = 0.0;    // per-step geometric decay of the surge; 0 = persistent
    double der_penetration = 0.2;  // independent per-block probability
    int delay_min = 6;
    int delay_max = 12;
    double noise_min = 0.7;  // realized / forecast-peak ratio bounds
    double noise_max = 1.0;
    std::uint64_t seed = 0;
};

/// Immutable ground-truth description of one trial, fully determined by
/// (network, config, seed).
struct Scenario {
    ScenarioConfig config;
    std::vector<FaultEvent> faults;
    std::vector<DerUnit> ders;
    std::vector<double> block_noise;  // per block, in [noise_min, noise_max)
};

/// Draw a scenario: faults uniform over lines whose endpoints lie outside
/// source blocks, without replacement; DER membership independent per block
/// at the penetration rate, offsets uniform in (0, 0.5], delays uniform
/// integers in [delay_min, delay_max]; noise uniform per block.
/// Throws ModelError when num_faults exceeds the candidate line count.
Scenario generate_scenario(const net::NetworkModel& net, const ScenarioConfig& cfg);

std::string serialize_scenario(const net::NetworkModel& net, const Scenario& sc);
Scenario load_scenario(const net::NetworkModel& net, const std::string& text);

/// Step-0 state produced by automatic fault isolation: every normally-closed
/// switch touching the faulted area is opened (including the faulted line's
/// own switch, when it has one).
struct IsolationResult {
    net::Topology topo;
    std::set<int> faulted_blocks;
    std::vector<int> islanded_blocks;   // healthy but de-energized, sorted
    std::vector<int> opened_switches;   // switches actually opened, sorted
};

IsolationResult isolate_faults(const net::NetworkModel& net, const Scenario& sc);

/// Ground-truth simulator for one trial. The engine owns the restoration
/// history (when each block came back) that CLPU and DER timing depend on;
/// the optimizer only ever sees the AMI measurements it hands back.
class ScenarioEngine {
public:
    ScenarioEngine(const net::NetworkModel& net, Scenario sc);

    const Scenario& scenario() const { return sc_; }
    const std::set<int>& faulted_blocks() const { return isolation_.faulted_blocks; }
    const std::vector<int>& islanded_blocks() const { return isolation_.islanded_blocks; }
    const IsolationResult& isolation() const { return isolation_; }

    /// Post-isolation state at step 0, with AMI measurements taken.
    SystemState initial_state() const;

    /// True per-node net loads at `step` under the block->feeder assignment.
    /// De-energized nodes read 0.
    void realize_loads(const std::vector<int>& assign, int step, std::vector<double>& p_kw,
                       std::vector<double>& q_kvar) const;

    /// Execute one decision: validate its switch preconditions against the
    /// live topology, advance one step, recompute energization, and take the
    /// AMI readback. Throws ModelError on an invalid decision.
    SystemState apply_decision_and_measure(const SystemState& state, const StepDecision& dec);

    bool der_online(int block, int step) const;

    /// Step at which the block was (re-)energized: 0 for blocks that never
    /// lost power, -1 while still de-energized.
    int restored_at(int block) const { return restored_at_[block]; }

    /// The controller's look-ahead forecast: last AMI measurement for
    /// energized nodes, cold-pickup-scaled peak for everything still dark.
    /// No DER knowledge leaks in.
    formulation::LoadForecast make_forecast(const SystemState& state, int first_step,
                                            int length) const;

private:
    double load_factor(int block, int step) const;

    const net::NetworkModel& net_;
    Scenario sc_;
    IsolationResult isolation_;
    std::vector<int> restored_at_;          // per block
    std::vector<std::uint8_t> was_islanded_;  // per block: lost power at step 0
    std::vector<double> der_offset_;        // per block, 0 when no unit
    std::vector<int> der_delay_;            // per block, -1 when no unit
};

}  // namespace restore::scenario
