#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "restore/milp.hpp"
#include "restore/netmodel.hpp"
#include "restore/state.hpp"

namespace restore::formulation {

using milp::VarId;

/// Optional segment-level reward floor attached to a window model.
struct SafeguardSpec {
    double bound = 0.0;         // F+, the segment optimum computed at entry (kW)
    double epsilon = 0.0;       // allowed shortfall fraction in [0,1)
    double fixed_reward = 0.0;  // reward already banked earlier in the segment (kW)
};

struct WindowSpec {
    int start_step = 0;
    int length = 1;
    double alpha = 0.0;   // switching penalty weight (kW per action)
    double big_m = 0.0;   // kW; dominates any block demand
    double v0 = 1.0;      // source voltage (pu)
    double v_min = 0.95;
    double v_max = 1.05;
    bool allow_shedding = false;
    /// Per-step reward weight bonus 1 + earliness*(L-1-t); keep small enough
    /// never to flip a comparison between plans of different totals.
    double earliness = 0.0;
    std::optional<SafeguardSpec> safeguard;
};

/// Per-node net load forecast (kW / kvar) covering the window's steps.
/// Values already include the CLPU surge for cold blocks.
struct LoadForecast {
    int first_step = 0;
    std::vector<std::vector<double>> p_kw;    // [step - first_step][node]
    std::vector<std::vector<double>> q_kvar;  // same shape
    int steps() const { return static_cast<int>(p_kw.size()); }
};

/// Handle map from symbol families to variable ids. Steps are relative to the
/// window start; absent combinations return -1.
class VarIndex {
public:
    VarId z(int t, int b, int f) const { return get(z_, {t, b, f}); }
    VarId dz(int t, int b, int f) const { return get(dz_, {t, b, f}); }
    VarId u(int t, int i, int f) const { return get(u_, {t, i, f}); }
    VarId open_act(int t, int s) const { return get(open_, {t, s, 0}); }
    VarId close_act(int t, int s) const { return get(close_, {t, s, 0}); }
    VarId gamma(int t, int s) const { return get(gamma_, {t, s, 0}); }
    VarId conn(int t, int s) const { return get(conn_, {t, s, 0}); }          // Gamma
    VarId fic_flow(int t, int s, int dir) const { return get(flow_, {t, s, dir}); }
    VarId line_p(int t, int l, int f) const { return get(lp_, {t, l, f}); }
    VarId line_q(int t, int l, int f) const { return get(lq_, {t, l, f}); }
    VarId feeder_p(int t, int f) const { return get(fp_, {t, f, 0}); }
    VarId feeder_q(int t, int f) const { return get(fq_, {t, f, 0}); }
    VarId volt(int t, int i, int f) const { return get(v_, {t, i, f}); }
    VarId slack_p(int t, int l, int f) const { return get(sp_, {t, l, f}); }
    VarId slack_q(int t, int l, int f) const { return get(sq_, {t, l, f}); }
    VarId slack_v(int t, int i, int f) const { return get(sv_, {t, i, f}); }
    VarId block_reward(int t, int b) const { return get(db_, {t, b, 0}); }
    VarId step_reward(int t) const { return get(d_, {t, 0, 0}); }

private:
    friend class WindowBuilder;
    using Key = std::array<int, 3>;
    using Map = std::map<Key, VarId>;
    static VarId get(const Map& m, Key k) {
        auto it = m.find(k);
        return it == m.end() ? -1 : it->second;
    }
    Map z_, dz_, u_, open_, close_, gamma_, conn_, flow_, lp_, lq_, fp_, fq_, v_, sp_, sq_, sv_,
        db_, d_;
};

struct WindowModel {
    milp::Model model;
    VarIndex index;
};

/// Serving-tree geometry of one feeder's candidate region (the blocks it may
/// ever supply and the unique node-level path to each of them).
struct FeederRegion {
    std::vector<int> blocks;        // region blocks in BFS order (first = source block)
    std::vector<int> parent_block;  // parallel to blocks, -1 for the source block
    std::vector<int> serving_switch;  // parallel to blocks, -1 for the source block
    std::vector<int> nodes;         // region nodes in BFS order (first = source node)
    std::vector<int> parent_line;   // parallel to nodes, -1 for the source node
    std::vector<std::vector<int>> child_lines;  // parallel to nodes
    std::vector<int> block_pos;     // network block -> position in `blocks`, -1 outside
    std::vector<int> node_pos;      // network node -> position in `nodes`, -1 outside
    bool in_region(int b) const { return block_pos[b] >= 0; }
};

/// Region trees for every feeder, computed once per network.
std::vector<FeederRegion> build_regions(const net::NetworkModel& net);

/// Translate one look-ahead window into a tagged MILP.
WindowModel build_window_model(const net::NetworkModel& net, const SystemState& state,
                               const LoadForecast& forecast, const WindowSpec& win,
                               const std::set<int>& faulted_blocks);

/// Extract the first-step decision from an optimal window solution.
/// Throws ModelError on non-integral binaries or action-limit violations.
StepDecision decode_first_step(const milp::Solution& sol, const VarIndex& index,
                               const net::NetworkModel& net);

struct PhysicsViolation {
    std::string kind;     // "transformer_p", "feeder_q", "voltage_low", ...
    std::string element;  // id of the violated component
    double magnitude = 0.0;  // per-unit
};

struct PhysicsReport {
    std::vector<PhysicsViolation> violations;
    std::vector<double> transformer_p_kw;  // realized loading per transformer
    std::vector<double> feeder_p_kw;       // realized head flow per feeder
    double max_transformer_util = 0.0;
    double max_feeder_util = 0.0;
};

/// Forward linearized power-flow evaluation on realized loads (kW/kvar per
/// node); the harness's physics oracle, independent of the MILP.
PhysicsReport evaluate_ground_truth_feasibility(const net::NetworkModel& net,
                                                const net::Topology& topo,
                                                const std::vector<int>& assign,
                                                const std::vector<double>& p_kw,
                                                const std::vector<double>& q_kvar,
                                                double v0 = 1.0, double v_min = 0.95,
                                                double v_max = 1.05, double tol = 1e-6);

}  // namespace restore::formulation
