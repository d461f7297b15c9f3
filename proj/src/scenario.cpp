#include "restore/scenario.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "restore/common.hpp"

namespace restore::scenario {

using json = nlohmann::json;

namespace {

/// Substation stub lines (touching a feeder source node) never fault; every
/// other line, including feeder-head switches, is a candidate.
bool touches_source_node(const net::NetworkModel& net, const net::Line& ln) {
    for (const auto& f : net.feeders)
        if (ln.from == f.source_node || ln.to == f.source_node) return true;
    return false;
}

void validate_config(const ScenarioConfig& cfg) {
    if (cfg.num_faults < 0) throw ModelError("num_faults must be non-negative");
    if (cfg.clpu_factor < 1.0) throw ModelError("clpu_factor must be >= 1");
    if (cfg.der_penetration < 0.0 || cfg.der_penetration > 1.0)
        throw ModelError("der_penetration must lie in [0, 1]");
    if (cfg.delay_min < 1 || cfg.delay_max < cfg.delay_min)
        throw ModelError("delay range must satisfy 1 <= min <= max");
    if (cfg.noise_min <= 0.0 || cfg.noise_max < cfg.noise_min)
        throw ModelError("noise range must satisfy 0 < min <= max");
}

}  // namespace

Scenario generate_scenario(const net::NetworkModel& net, const ScenarioConfig& cfg) {
    validate_config(cfg);
    Rng rng(cfg.seed);
    Scenario sc;
    sc.config = cfg;

    std::vector<int> candidates;
    for (std::size_t l = 0; l < net.lines.size(); ++l)
        if (!touches_source_node(net, net.lines[l])) candidates.push_back(static_cast<int>(l));
    if (cfg.num_faults > static_cast<int>(candidates.size()))
        throw ModelError("num_faults exceeds the " + std::to_string(candidates.size()) +
                         " candidate lines");
    for (int k = 0; k < cfg.num_faults; ++k) {
        std::size_t pick = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1 - k));
        sc.faults.push_back({candidates[pick]});
        std::swap(candidates[pick], candidates[candidates.size() - 1 - k]);
    }
    std::sort(sc.faults.begin(), sc.faults.end(),
              [](const FaultEvent& a, const FaultEvent& b) { return a.line < b.line; });

    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        if (rng.uniform01() >= cfg.der_penetration) continue;
        DerUnit u;
        u.block = static_cast<int>(b);
        u.offset_fraction = 0.5 * (1.0 - rng.uniform01());  // uniform in (0, 0.5]
        u.reconnect_delay_steps = static_cast<int>(rng.uniform_int(cfg.delay_min, cfg.delay_max));
        sc.ders.push_back(u);
    }

    sc.block_noise.resize(net.blocks.size());
    for (double& v : sc.block_noise) v = rng.uniform(cfg.noise_min, cfg.noise_max);
    return sc;
}

std::string serialize_scenario(const net::NetworkModel& net, const Scenario& sc) {
    json doc;
    json cfg;
    cfg["num_faults"] = sc.config.num_faults;
    cfg["clpu_factor"] = sc.config.clpu_factor;
    cfg["clpu_decay"] = sc.config.clpu_decay;
    cfg["der_penetration"] = sc.config.der_penetration;
    cfg["delay_min"] = sc.config.delay_min;
    cfg["delay_max"] = sc.config.delay_max;
    cfg["noise_min"] = sc.config.noise_min;
    cfg["noise_max"] = sc.config.noise_max;
    cfg["seed"] = sc.config.seed;
    doc["config"] = std::move(cfg);

    doc["faults"] = json::array();
    for (const FaultEvent& f : sc.faults) {
        const net::Line& ln = net.lines[f.line];
        doc["faults"].push_back(
            {{"from", net.nodes[ln.from].id}, {"to", net.nodes[ln.to].id}});
    }
    doc["ders"] = json::array();
    for (const DerUnit& u : sc.ders)
        doc["ders"].push_back({{"block", net.blocks[u.block].id},
                               {"offset_fraction", u.offset_fraction},
                               {"reconnect_delay_steps", u.reconnect_delay_steps}});
    json noise = json::object();
    for (std::size_t b = 0; b < sc.block_noise.size(); ++b)
        noise[net.blocks[b].id] = sc.block_noise[b];
    doc["block_noise"] = std::move(noise);
    return doc.dump(2) + "\n";
}

Scenario load_scenario(const net::NetworkModel& net, const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("scenario parse error: ") + e.what());
    }
    Scenario sc;
    try {
        const json& cfg = doc.at("config");
        sc.config.num_faults = cfg.at("num_faults").get<int>();
        sc.config.clpu_factor = cfg.at("clpu_factor").get<double>();
        sc.config.clpu_decay = cfg.value("clpu_decay", 0.0);
        sc.config.der_penetration = cfg.at("der_penetration").get<double>();
        sc.config.delay_min = cfg.at("delay_min").get<int>();
        sc.config.delay_max = cfg.at("delay_max").get<int>();
        sc.config.noise_min = cfg.value("noise_min", 0.7);
        sc.config.noise_max = cfg.value("noise_max", 1.0);
        sc.config.seed = cfg.at("seed").get<std::uint64_t>();

        for (const json& jf : doc.value("faults", json::array())) {
            int a = net.node_index(jf.at("from").get<std::string>());
            int b = net.node_index(jf.at("to").get<std::string>());
            if (a < 0 || b < 0) throw SchemaError("scenario fault references unknown node");
            int line = -1;
            for (std::size_t l = 0; l < net.lines.size(); ++l) {
                const net::Line& ln = net.lines[l];
                if ((ln.from == a && ln.to == b) || (ln.from == b && ln.to == a)) {
                    line = static_cast<int>(l);
                    break;
                }
            }
            if (line < 0) throw SchemaError("scenario fault references unknown line");
            sc.faults.push_back({line});
        }
        for (const json& ju : doc.value("ders", json::array())) {
            DerUnit u;
            std::string bid = ju.at("block").get<std::string>();
            u.block = -1;
            for (std::size_t b = 0; b < net.blocks.size(); ++b)
                if (net.blocks[b].id == bid) u.block = static_cast<int>(b);
            if (u.block < 0) throw SchemaError("scenario DER references unknown block " + bid);
            u.offset_fraction = ju.at("offset_fraction").get<double>();
            u.reconnect_delay_steps = ju.at("reconnect_delay_steps").get<int>();
            if (u.offset_fraction <= 0.0 || u.offset_fraction > 0.5)
                throw SchemaError("DER offset_fraction must lie in (0, 0.5]");
            sc.ders.push_back(u);
        }
        sc.block_noise.assign(net.blocks.size(), 1.0);
        if (doc.contains("block_noise"))
            for (std::size_t b = 0; b < net.blocks.size(); ++b)
                sc.block_noise[b] =
                    doc["block_noise"].value(net.blocks[b].id, 1.0);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("scenario schema error: ") + e.what());
    }
    return sc;
}

IsolationResult isolate_faults(const net::NetworkModel& net, const Scenario& sc) {
    IsolationResult out;
    out.topo = net.normal_topology();
    for (const FaultEvent& f : sc.faults) {
        const net::Line& ln = net.lines[f.line];
        out.faulted_blocks.insert(net.nodes[ln.from].block);
        out.faulted_blocks.insert(net.nodes[ln.to].block);
    }
    for (int b : out.faulted_blocks)
        for (auto [nb, s] : net.blocks[b].boundary) {
            (void)nb;
            if (out.topo.closed[s]) {
                out.topo.closed[s] = false;
                out.opened_switches.push_back(s);
            }
        }
    std::sort(out.opened_switches.begin(), out.opened_switches.end());
    out.opened_switches.erase(
        std::unique(out.opened_switches.begin(), out.opened_switches.end()),
        out.opened_switches.end());

    std::vector<int> assign = net::energized_map(net, out.topo, out.faulted_blocks);
    for (std::size_t b = 0; b < net.blocks.size(); ++b)
        if (assign[b] < 0 && !out.faulted_blocks.count(static_cast<int>(b)))
            out.islanded_blocks.push_back(static_cast<int>(b));
    return out;
}

ScenarioEngine::ScenarioEngine(const net::NetworkModel& net, Scenario sc)
    : net_(net), sc_(std::move(sc)), isolation_(isolate_faults(net, sc_)) {
    std::vector<int> assign = net::energized_map(net_, isolation_.topo, isolation_.faulted_blocks);
    restored_at_.assign(net_.blocks.size(), -1);
    was_islanded_.assign(net_.blocks.size(), 0);
    for (std::size_t b = 0; b < net_.blocks.size(); ++b) {
        if (assign[b] >= 0)
            restored_at_[b] = 0;  // never lost power
        else
            was_islanded_[b] = 1;
    }
    der_offset_.assign(net_.blocks.size(), 0.0);
    der_delay_.assign(net_.blocks.size(), -1);
    for (const DerUnit& u : sc_.ders) {
        der_offset_[u.block] = u.offset_fraction;
        der_delay_[u.block] = u.reconnect_delay_steps;
    }
}

bool ScenarioEngine::der_online(int block, int step) const {
    if (der_delay_[block] < 0) return false;
    if (!was_islanded_[block]) return true;  // never tripped
    int r = restored_at_[block];
    return r >= 0 && step >= r + der_delay_[block];
}

double ScenarioEngine::load_factor(int block, int step) const {
    double f = sc_.block_noise[block];
    if (was_islanded_[block] && restored_at_[block] >= 0) {
        double surge = sc_.config.clpu_factor;
        if (sc_.config.clpu_decay > 0.0) {
            int age = step - restored_at_[block];
            surge = 1.0 + (surge - 1.0) * std::pow(1.0 - sc_.config.clpu_decay, age);
        }
        f *= surge;
    }
    if (der_online(block, step)) f *= 1.0 - der_offset_[block];
    return std::max(f, 0.0);
}

void ScenarioEngine::realize_loads(const std::vector<int>& assign, int step,
                                   std::vector<double>& p_kw, std::vector<double>& q_kvar) const {
    p_kw.assign(net_.nodes.size(), 0.0);
    q_kvar.assign(net_.nodes.size(), 0.0);
    for (std::size_t b = 0; b < net_.blocks.size(); ++b) {
        if (assign[b] < 0) continue;
        double f = load_factor(static_cast<int>(b), step);
        for (int i : net_.blocks[b].node_ids) {
            p_kw[i] = net_.nodes[i].peak_active_kw * f;
            q_kvar[i] = net_.nodes[i].peak_reactive_kvar * f;
        }
    }
}

SystemState ScenarioEngine::initial_state() const {
    SystemState st;
    st.step = 0;
    st.topo = isolation_.topo;
    st.assign = net::energized_map(net_, st.topo, isolation_.faulted_blocks);
    std::vector<double> q;
    realize_loads(st.assign, 0, st.measured_kw, q);
    return st;
}

SystemState ScenarioEngine::apply_decision_and_measure(const SystemState& state,
                                                       const StepDecision& dec) {
    if (dec.open_switch >= 0 && !state.topo.closed[dec.open_switch])
        throw ModelError("decision opens an already-open switch " +
                         net_.switches[dec.open_switch].id);
    if (dec.close_switch >= 0 && state.topo.closed[dec.close_switch])
        throw ModelError("decision closes an already-closed switch " +
                         net_.switches[dec.close_switch].id);
    if (dec.open_switch >= 0 && dec.open_switch == dec.close_switch)
        throw ModelError("decision opens and closes the same switch");

    SystemState next;
    next.step = state.step + 1;
    next.topo = state.topo;
    if (dec.open_switch >= 0) next.topo.closed[dec.open_switch] = false;
    if (dec.close_switch >= 0) next.topo.closed[dec.close_switch] = true;
    next.assign = net::energized_map(net_, next.topo, isolation_.faulted_blocks);

    for (std::size_t b = 0; b < net_.blocks.size(); ++b)
        if (next.assign[b] >= 0 && restored_at_[b] < 0) restored_at_[b] = next.step;

    std::vector<double> q;
    realize_loads(next.assign, next.step, next.measured_kw, q);
    return next;
}

formulation::LoadForecast ScenarioEngine::make_forecast(const SystemState& state, int first_step,
                                                        int length) const {
    formulation::LoadForecast fc;
    fc.first_step = first_step;
    std::vector<double> p(net_.nodes.size(), 0.0), q(net_.nodes.size(), 0.0);
    double surge = sc_.config.clpu_factor;
    for (std::size_t b = 0; b < net_.blocks.size(); ++b) {
        for (int i : net_.blocks[b].node_ids) {
            if (state.assign[b] >= 0) {
                // live AMI readback; reactive load scales with it
                p[i] = state.measured_kw[i];
                double pk = net_.nodes[i].peak_active_kw;
                q[i] = pk > 0.0 ? p[i] * (net_.nodes[i].peak_reactive_kvar / pk) : 0.0;
            } else {
                // still dark: worst-case cold-pickup peak
                p[i] = net_.nodes[i].peak_active_kw * surge;
                q[i] = net_.nodes[i].peak_reactive_kvar * surge;
            }
        }
    }
    for (int t = 0; t < length; ++t) {
        fc.p_kw.push_back(p);
        fc.q_kvar.push_back(q);
    }
    return fc;
}

}  // namespace restore::scenario
