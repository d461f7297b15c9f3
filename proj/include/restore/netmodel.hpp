#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "restore/common.hpp"

namespace restore::net {

struct Node {
    std::string id;
    double peak_active_kw = 0.0;
    double peak_reactive_kvar = 0.0;
    bool q_given = false;  // whether the dataset supplied kvar or it was derived
    int block = -1;        // load-block index, assigned by partitioning
};

struct Line {
    int from = -1;  // node index
    int to = -1;
    double r_pu = 0.0;
    double x_pu = 0.0;
    std::string switch_id;  // empty for solid lines
    int switch_index = -1;
    bool is_switch() const { return !switch_id.empty(); }
};

struct Switch {
    std::string id;
    int node_a = -1;
    int node_b = -1;
    bool normally_closed = true;
    int line = -1;     // owning line index
    int block_a = -1;  // derived block pair
    int block_b = -1;
};

struct Feeder {
    std::string id;
    int source_node = -1;
    std::string transformer_id;
    int transformer = -1;
    double p_max_kw = 0.0;
    double q_max_kvar = 0.0;
};

struct Transformer {
    std::string id;
    double p_max_kw = 0.0;
    double q_max_kvar = 0.0;
    std::vector<int> feeders;  // derived from feeder declarations
};

struct LoadBlock {
    std::string id;
    std::vector<int> node_ids;
    std::vector<int> adjacent_feeders;               // F_b, sorted
    std::vector<std::pair<int, int>> boundary;       // (neighbor block, switch index)
    int home_feeder = -1;                            // feeder under the normal topology
    int source_of_feeder = -1;                       // feeder whose source node lies here, or -1
    double peak_active_kw = 0.0;
    double peak_reactive_kvar = 0.0;
};

/// Closed/open state per switch index.
struct Topology {
    std::vector<std::uint8_t> closed;
    bool operator==(const Topology&) const = default;
};

class NetworkModel {
public:
    double base_kv = 0.0;
    double base_mva = 1.0;
    std::vector<Node> nodes;
    std::vector<Line> lines;
    std::vector<Switch> switches;
    std::vector<Feeder> feeders;
    std::vector<Transformer> transformers;
    std::vector<LoadBlock> blocks;
    std::vector<std::string> warnings;

    int node_index(const std::string& id) const;
    int switch_index(const std::string& id) const;
    int feeder_index(const std::string& id) const;
    int block_of_node(const std::string& id) const;

    Topology normal_topology() const;
    double power_base_kw() const { return base_mva * 1000.0; }
};

/// Parse and fully index a network document (JSON text). Partitions load
/// blocks, resolves all cross references, and validates radiality of the
/// normal topology.
NetworkModel load_network(const std::string& text);

/// Inverse of load_network up to formatting; load(serialize(net)) == net.
std::string serialize_network(const NetworkModel& net);

/// Recompute the block partition and block graph in place.
void partition_load_blocks(NetworkModel& net);

/// True iff closed lines form no cycle and no energized component contains
/// more than one feeder source.
bool is_radial(const NetworkModel& net, const Topology& topo);

/// Which feeder serves each block (-1 = de-energized), by BFS from feeder
/// sources through closed switches, stopping at open switches and faults.
/// Throws ModelError on non-radial input.
std::vector<int> energized_map(const NetworkModel& net, const Topology& topo,
                               const std::set<int>& faulted_blocks);

}  // namespace restore::net
