#include "restore/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include <json.hpp>

using nlohmann::json;

namespace restore::net {

namespace {

constexpr double kDefaultPfTan = 0.32868480153332954;  // tan(acos(0.95))

double require_number(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_number())
        throw SchemaError(ctx + ": missing or non-numeric field '" + key + "'");
    return j[key].get<double>();
}

std::string require_string(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_string())
        throw SchemaError(ctx + ": missing or non-string field '" + key + "'");
    return j[key].get<std::string>();
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    /// Returns false if a and b were already joined (cycle).
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

}  // namespace

int NetworkModel::node_index(const std::string& id) const {
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (nodes[i].id == id) return i;
    return -1;
}

int NetworkModel::switch_index(const std::string& id) const {
    for (int i = 0; i < static_cast<int>(switches.size()); ++i)
        if (switches[i].id == id) return i;
    return -1;
}

int NetworkModel::feeder_index(const std::string& id) const {
    for (int i = 0; i < static_cast<int>(feeders.size()); ++i)
        if (feeders[i].id == id) return i;
    return -1;
}

int NetworkModel::block_of_node(const std::string& id) const {
    int n = node_index(id);
    return n < 0 ? -1 : nodes[n].block;
}

Topology NetworkModel::normal_topology() const {
    Topology t;
    t.closed.resize(switches.size());
    for (std::size_t s = 0; s < switches.size(); ++s) t.closed[s] = switches[s].normally_closed;
    return t;
}

void partition_load_blocks(NetworkModel& net) {
    const int n = static_cast<int>(net.nodes.size());
    UnionFind uf(n);
    std::vector<bool> touched(n, false);
    for (const auto& l : net.lines) {
        touched[l.from] = touched[l.to] = true;
        if (!l.is_switch()) uf.unite(l.from, l.to);
    }
    for (int i = 0; i < n; ++i)
        if (!touched[i])
            net.warnings.push_back("node '" + net.nodes[i].id + "' has no line attached");

    // Number blocks in order of first node appearance for determinism.
    std::map<int, int> root_to_block;
    net.blocks.clear();
    for (int i = 0; i < n; ++i) {
        int r = uf.find(i);
        auto [it, fresh] = root_to_block.try_emplace(r, static_cast<int>(net.blocks.size()));
        if (fresh) {
            LoadBlock b;
            b.id = "B" + std::to_string(net.blocks.size() + 1);
            net.blocks.push_back(std::move(b));
        }
        int bi = it->second;
        net.nodes[i].block = bi;
        net.blocks[bi].node_ids.push_back(i);
        net.blocks[bi].peak_active_kw += net.nodes[i].peak_active_kw;
        net.blocks[bi].peak_reactive_kvar += net.nodes[i].peak_reactive_kvar;
    }

    // Block graph: one edge per switch.
    for (int s = 0; s < static_cast<int>(net.switches.size()); ++s) {
        auto& sw = net.switches[s];
        sw.block_a = net.nodes[sw.node_a].block;
        sw.block_b = net.nodes[sw.node_b].block;
        if (sw.block_a == sw.block_b)
            throw SchemaError("switch '" + sw.id + "' endpoints lie in the same load block");
        net.blocks[sw.block_a].boundary.push_back({sw.block_b, s});
        net.blocks[sw.block_b].boundary.push_back({sw.block_a, s});
    }

    for (int f = 0; f < static_cast<int>(net.feeders.size()); ++f) {
        int b = net.nodes[net.feeders[f].source_node].block;
        if (net.blocks[b].source_of_feeder >= 0)
            throw SchemaError("feeders '" + net.feeders[net.blocks[b].source_of_feeder].id +
                              "' and '" + net.feeders[f].id + "' share a source block");
        net.blocks[b].source_of_feeder = f;
    }

    // Home feeder under the normal topology.
    auto assign = energized_map(net, net.normal_topology(), {});
    for (int b = 0; b < static_cast<int>(net.blocks.size()); ++b)
        net.blocks[b].home_feeder = assign[b];

    // F_b: feeders that can serve b through a path crossing at most one
    // normally-open switch. Closed sectionalizers are free to traverse, so a
    // feeder can back-feed an entire neighboring lateral through a single tie.
    // Another feeder's substation block is never part of a serving path.
    const int nblocks = static_cast<int>(net.blocks.size());
    std::vector<std::set<int>> fb(nblocks);
    for (int f = 0; f < static_cast<int>(net.feeders.size()); ++f) {
        int src = net.nodes[net.feeders[f].source_node].block;
        std::vector<int> ties_crossed(nblocks, -1);  // -1: unreached
        std::deque<int> dq{src};
        ties_crossed[src] = 0;
        while (!dq.empty()) {  // 0-1 BFS over the block graph
            int cur = dq.front();
            dq.pop_front();
            for (auto [adj, s] : net.blocks[cur].boundary) {
                if (net.blocks[adj].source_of_feeder >= 0 &&
                    net.blocks[adj].source_of_feeder != f)
                    continue;
                int cost = ties_crossed[cur] + (net.switches[s].normally_closed ? 0 : 1);
                if (cost > 1) continue;
                if (ties_crossed[adj] >= 0 && ties_crossed[adj] <= cost) continue;
                ties_crossed[adj] = cost;
                if (cost == ties_crossed[cur])
                    dq.push_front(adj);
                else
                    dq.push_back(adj);
            }
        }
        for (int b = 0; b < nblocks; ++b)
            if (ties_crossed[b] >= 0) fb[b].insert(f);
    }
    for (int b = 0; b < nblocks; ++b)
        net.blocks[b].adjacent_feeders.assign(fb[b].begin(), fb[b].end());
}

bool is_radial(const NetworkModel& net, const Topology& topo) {
    if (topo.closed.size() != net.switches.size())
        throw ModelError("topology does not cover the switch set");
    UnionFind uf(static_cast<int>(net.nodes.size()));
    for (const auto& l : net.lines) {
        if (l.is_switch() && !topo.closed[l.switch_index]) continue;
        if (!uf.unite(l.from, l.to)) return false;  // cycle
    }
    std::map<int, int> source_count;
    for (const auto& f : net.feeders)
        if (++source_count[uf.find(f.source_node)] > 1) return false;
    return true;
}

std::vector<int> energized_map(const NetworkModel& net, const Topology& topo,
                               const std::set<int>& faulted_blocks) {
    if (!is_radial(net, topo)) throw ModelError("energized_map requires a radial topology");
    std::vector<int> assign(net.blocks.size(), -1);
    for (int f = 0; f < static_cast<int>(net.feeders.size()); ++f) {
        int start = net.nodes[net.feeders[f].source_node].block;
        if (faulted_blocks.count(start)) continue;
        std::queue<int> q;
        q.push(start);
        assign[start] = f;
        while (!q.empty()) {
            int b = q.front();
            q.pop();
            for (auto [nb, s] : net.blocks[b].boundary) {
                if (!topo.closed[s] || assign[nb] >= 0 || faulted_blocks.count(nb)) continue;
                assign[nb] = f;
                q.push(nb);
            }
        }
    }
    return assign;
}

NetworkModel load_network(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("network document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("network document root must be an object");
    for (const char* key : {"nodes", "lines", "switches", "feeders", "transformers"})
        if (!doc.contains(key) || !doc[key].is_array())
            throw SchemaError(std::string("missing or non-array top-level key '") + key + "'");

    NetworkModel net;
    net.base_kv = require_number(doc, "base_kv", "network");
    net.base_mva = require_number(doc, "base_mva", "network");
    if (net.base_kv <= 0 || net.base_mva <= 0)
        throw SchemaError("base_kv and base_mva must be positive");

    std::map<std::string, int> node_ix, switch_ix, feeder_ix, xfmr_ix;
    for (const auto& jn : doc["nodes"]) {
        Node nd;
        nd.id = require_string(jn, "id", "node");
        if (node_ix.count(nd.id)) throw SchemaError("duplicate node id '" + nd.id + "'");
        nd.peak_active_kw = require_number(jn, "peak_active_kw", "node " + nd.id);
        if (nd.peak_active_kw < 0)
            throw SchemaError("node " + nd.id + ": peak_active_kw must be >= 0");
        if (jn.contains("peak_reactive_kvar")) {
            nd.peak_reactive_kvar = require_number(jn, "peak_reactive_kvar", "node " + nd.id);
            nd.q_given = true;
        } else {
            nd.peak_reactive_kvar = nd.peak_active_kw * kDefaultPfTan;
        }
        node_ix[nd.id] = static_cast<int>(net.nodes.size());
        net.nodes.push_back(std::move(nd));
    }

    for (const auto& js : doc["switches"]) {
        Switch sw;
        sw.id = require_string(js, "id", "switch");
        if (switch_ix.count(sw.id)) throw SchemaError("duplicate switch id '" + sw.id + "'");
        if (!js.contains("normally_closed") || !js["normally_closed"].is_boolean())
            throw SchemaError("switch " + sw.id + ": missing boolean 'normally_closed'");
        sw.normally_closed = js["normally_closed"].get<bool>();
        switch_ix[sw.id] = static_cast<int>(net.switches.size());
        net.switches.push_back(std::move(sw));
    }

    for (const auto& jl : doc["lines"]) {
        Line ln;
        std::string from = require_string(jl, "from", "line");
        std::string to = require_string(jl, "to", "line");
        std::string ctx = "line " + from + "-" + to;
        auto fit = node_ix.find(from);
        auto tit = node_ix.find(to);
        if (fit == node_ix.end()) throw SchemaError(ctx + ": unknown node '" + from + "'");
        if (tit == node_ix.end()) throw SchemaError(ctx + ": unknown node '" + to + "'");
        ln.from = fit->second;
        ln.to = tit->second;
        ln.r_pu = require_number(jl, "r_pu", ctx);
        ln.x_pu = require_number(jl, "x_pu", ctx);
        if (ln.r_pu < 0 || ln.x_pu < 0) throw SchemaError(ctx + ": negative impedance");
        if (jl.contains("switch_id")) {
            ln.switch_id = require_string(jl, "switch_id", ctx);
            auto sit = switch_ix.find(ln.switch_id);
            if (sit == switch_ix.end())
                throw SchemaError(ctx + ": unknown switch '" + ln.switch_id + "'");
            ln.switch_index = sit->second;
            auto& sw = net.switches[sit->second];
            if (sw.line >= 0)
                throw SchemaError("switch '" + sw.id + "' referenced by more than one line");
            sw.line = static_cast<int>(net.lines.size());
            sw.node_a = ln.from;
            sw.node_b = ln.to;
        }
        net.lines.push_back(std::move(ln));
    }
    for (const auto& sw : net.switches)
        if (sw.line < 0) throw SchemaError("switch '" + sw.id + "' has no line");

    for (const auto& jt : doc["transformers"]) {
        Transformer tr;
        tr.id = require_string(jt, "id", "transformer");
        if (xfmr_ix.count(tr.id)) throw SchemaError("duplicate transformer id '" + tr.id + "'");
        tr.p_max_kw = require_number(jt, "p_max_kw", "transformer " + tr.id);
        tr.q_max_kvar = require_number(jt, "q_max_kvar", "transformer " + tr.id);
        if (tr.p_max_kw <= 0) throw SchemaError("transformer " + tr.id + ": p_max_kw must be > 0");
        xfmr_ix[tr.id] = static_cast<int>(net.transformers.size());
        net.transformers.push_back(std::move(tr));
    }

    for (const auto& jf : doc["feeders"]) {
        Feeder fd;
        fd.id = require_string(jf, "id", "feeder");
        if (feeder_ix.count(fd.id)) throw SchemaError("duplicate feeder id '" + fd.id + "'");
        std::string src = require_string(jf, "source_node", "feeder " + fd.id);
        auto nit = node_ix.find(src);
        if (nit == node_ix.end())
            throw SchemaError("feeder " + fd.id + ": unknown source node '" + src + "'");
        fd.source_node = nit->second;
        fd.transformer_id = require_string(jf, "transformer_id", "feeder " + fd.id);
        auto xit = xfmr_ix.find(fd.transformer_id);
        if (xit == xfmr_ix.end())
            throw SchemaError("feeder " + fd.id + ": unknown transformer '" + fd.transformer_id +
                              "'");
        fd.transformer = xit->second;
        fd.p_max_kw = require_number(jf, "p_max_kw", "feeder " + fd.id);
        fd.q_max_kvar = require_number(jf, "q_max_kvar", "feeder " + fd.id);
        if (fd.p_max_kw <= 0) throw SchemaError("feeder " + fd.id + ": p_max_kw must be > 0");
        int fi = static_cast<int>(net.feeders.size());
        net.transformers[fd.transformer].feeders.push_back(fi);
        feeder_ix[fd.id] = fi;
        net.feeders.push_back(std::move(fd));
    }
    if (net.feeders.empty()) throw SchemaError("network declares no feeders");
    for (const auto& tr : net.transformers)
        if (tr.feeders.empty())
            throw SchemaError("transformer '" + tr.id + "' serves no feeder");

    if (!is_radial(net, net.normal_topology()))
        throw SchemaError("non-radial: the normally-closed topology contains a cycle or "
                          "connects two feeder sources");

    partition_load_blocks(net);
    if (net.blocks.size() < net.feeders.size())
        throw SchemaError("fewer load blocks than feeders");
    return net;
}

std::string serialize_network(const NetworkModel& net) {
    json doc;
    doc["base_kv"] = net.base_kv;
    doc["base_mva"] = net.base_mva;
    doc["nodes"] = json::array();
    for (const auto& nd : net.nodes)
        doc["nodes"].push_back({{"id", nd.id},
                                {"peak_active_kw", nd.peak_active_kw},
                                {"peak_reactive_kvar", nd.peak_reactive_kvar}});
    doc["lines"] = json::array();
    for (const auto& ln : net.lines) {
        json jl = {{"from", net.nodes[ln.from].id},
                   {"to", net.nodes[ln.to].id},
                   {"r_pu", ln.r_pu},
                   {"x_pu", ln.x_pu}};
        if (ln.is_switch()) jl["switch_id"] = ln.switch_id;
        doc["lines"].push_back(std::move(jl));
    }
    doc["switches"] = json::array();
    for (const auto& sw : net.switches)
        doc["switches"].push_back({{"id", sw.id}, {"normally_closed", sw.normally_closed}});
    doc["feeders"] = json::array();
    for (const auto& fd : net.feeders)
        doc["feeders"].push_back({{"id", fd.id},
                                  {"source_node", net.nodes[fd.source_node].id},
                                  {"transformer_id", fd.transformer_id},
                                  {"p_max_kw", fd.p_max_kw},
                                  {"q_max_kvar", fd.q_max_kvar}});
    doc["transformers"] = json::array();
    for (const auto& tr : net.transformers)
        doc["transformers"].push_back(
            {{"id", tr.id}, {"p_max_kw", tr.p_max_kw}, {"q_max_kvar", tr.q_max_kvar}});
    return doc.dump(2);
}

}  // namespace restore::net
