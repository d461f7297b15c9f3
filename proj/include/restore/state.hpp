#pragma once

#include <vector>

#include "restore/netmodel.hpp"

namespace restore {

/// Live controller view of the system: topology, block-feeder assignment,
/// and the latest per-node net-load measurements (kW).
struct SystemState {
    int step = 0;
    net::Topology topo;
    std::vector<int> assign;           // block -> feeder, -1 = de-energized
    std::vector<double> measured_kw;   // per node, 0 when de-energized
};

/// One executed restoration step: at most one open and one close action,
/// plus the set of (block, feeder) restorations it produced.
struct StepDecision {
    int open_switch = -1;
    int close_switch = -1;
    std::vector<std::pair<int, int>> restored_blocks;
    bool empty() const {
        return open_switch < 0 && close_switch < 0 && restored_blocks.empty();
    }
};

}  // namespace restore
