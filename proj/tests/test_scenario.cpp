#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "restore/common.hpp"
#include "restore/netmodel.hpp"
#include "restore/scenario.hpp"

using namespace restore;
using namespace restore::net;
using namespace restore::scenario;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const NetworkModel& dataset() {
    static NetworkModel net = load_network(read_file(DATA_DIR "/ieee123.json"));
    return net;
}

int switch_line(const NetworkModel& net, const std::string& switch_id) {
    int s = net.switch_index(switch_id);
    REQUIRE(s >= 0);
    return net.switches[s].line;
}

/// A hand-built deterministic scenario: unit noise, no DERs unless added.
Scenario manual_scenario(const NetworkModel& net, std::vector<int> fault_lines) {
    Scenario sc;
    sc.config.num_faults = static_cast<int>(fault_lines.size());
    for (int l : fault_lines) sc.faults.push_back({l});
    sc.block_noise.assign(net.blocks.size(), 1.0);
    return sc;
}

bool touches_source_node(const NetworkModel& net, const restore::net::Line& ln) {
    for (const auto& f : net.feeders)
        if (ln.from == f.source_node || ln.to == f.source_node) return true;
    return false;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
    const auto& net = dataset();
    ScenarioConfig cfg;
    cfg.num_faults = 3;
    cfg.seed = 42;
    auto a = generate_scenario(net, cfg);
    auto b = generate_scenario(net, cfg);
    CHECK(serialize_scenario(net, a) == serialize_scenario(net, b));
    cfg.seed = 43;
    auto c = generate_scenario(net, cfg);
    CHECK(serialize_scenario(net, a) != serialize_scenario(net, c));
}

TEST_CASE("zero faults still draws the DER population") {
    const auto& net = dataset();
    ScenarioConfig cfg;
    cfg.num_faults = 0;
    int with_ders = 0;
    for (int seed = 0; seed < 10; ++seed) {
        cfg.seed = seed;
        auto sc = generate_scenario(net, cfg);
        CHECK(sc.faults.empty());
        if (!sc.ders.empty()) ++with_ders;
    }
    CHECK(with_ders == 10);  // P(no DER in 56 blocks at 0.2) is negligible
}

TEST_CASE("fault draws avoid substation stubs and never repeat") {
    const auto& net = dataset();
    ScenarioConfig cfg;
    cfg.num_faults = 5;
    for (int seed = 0; seed < 50; ++seed) {
        cfg.seed = seed;
        auto sc = generate_scenario(net, cfg);
        REQUIRE(sc.faults.size() == 5);
        std::set<int> seen;
        for (const auto& f : sc.faults) {
            CHECK(seen.insert(f.line).second);
            CHECK(!touches_source_node(net, net.lines[f.line]));
        }
    }
}

TEST_CASE("too many faults is rejected") {
    const auto& net = dataset();
    int candidates = 0;
    for (const auto& ln : net.lines)
        if (!touches_source_node(net, ln)) ++candidates;
    ScenarioConfig cfg;
    cfg.num_faults = candidates;  // exactly exhausting the pool is fine
    cfg.seed = 7;
    CHECK(generate_scenario(net, cfg).faults.size() == static_cast<std::size_t>(candidates));
    cfg.num_faults = candidates + 1;
    CHECK_THROWS_AS(generate_scenario(net, cfg), ModelError);
}

TEST_CASE("DER population matches the binomial law") {
    const auto& net = dataset();
    ScenarioConfig cfg;
    cfg.num_faults = 0;
    const int trials = 300;
    double total = 0.0;
    for (int seed = 0; seed < trials; ++seed) {
        cfg.seed = 1000 + seed;
        auto sc = generate_scenario(net, cfg);
        total += static_cast<double>(sc.ders.size());
        for (const auto& u : sc.ders) {
            CHECK(u.offset_fraction > 0.0);
            CHECK(u.offset_fraction <= 0.5);
            CHECK(u.reconnect_delay_steps >= 6);
            CHECK(u.reconnect_delay_steps <= 12);
        }
    }
    double n = static_cast<double>(net.blocks.size());
    double p = cfg.der_penetration;
    double mean = total / trials;
    double sigma_mean = std::sqrt(n * p * (1.0 - p) / trials);
    CHECK(std::abs(mean - n * p) <= 3.0 * sigma_mean);
}

TEST_CASE("mid-feeder fault opens three switches and islands the tail") {
    const auto& net = dataset();
    auto sc = manual_scenario(net, {switch_line(net, "S1_3")});
    auto iso = isolate_faults(net, sc);

    // the faulted line's own switch plus the up/downstream boundaries
    REQUIRE(iso.opened_switches.size() == 3);
    std::set<std::string> ids;
    for (int s : iso.opened_switches) ids.insert(net.switches[s].id);
    CHECK(ids == std::set<std::string>{"S1_2", "S1_3", "S1_4"});

    CHECK(iso.faulted_blocks ==
          std::set<int>{net.block_of_node("7"), net.block_of_node("13")});
    std::set<int> islanded(iso.islanded_blocks.begin(), iso.islanded_blocks.end());
    CHECK(islanded == std::set<int>{net.block_of_node("18"), net.block_of_node("21"),
                                    net.block_of_node("23")});
    CHECK(is_radial(net, iso.topo));

    // upstream of the fault stays energized
    auto assign = energized_map(net, iso.topo, iso.faulted_blocks);
    CHECK(assign[net.block_of_node("1")] == net.feeder_index("F1"));
    CHECK(assign[net.block_of_node("3")] == net.feeder_index("F1"));
}

TEST_CASE("tail-end fault islands nothing healthy") {
    const auto& net = dataset();
    auto sc = manual_scenario(net, {switch_line(net, "S1_6")});
    auto iso = isolate_faults(net, sc);
    CHECK(iso.islanded_blocks.empty());
    CHECK(iso.faulted_blocks ==
          std::set<int>{net.block_of_node("21"), net.block_of_node("23")});
}

TEST_CASE("fault in a source block takes the whole feeder down") {
    const auto& net = dataset();
    int src_line = -1;
    int f1 = net.feeder_index("F1");
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        int b = net.nodes[net.lines[l].from].block;
        if (net.blocks[b].source_of_feeder == f1 &&
            net.nodes[net.lines[l].to].block == b) {
            src_line = static_cast<int>(l);
            break;
        }
    }
    REQUIRE(src_line >= 0);
    auto sc = manual_scenario(net, {src_line});
    auto iso = isolate_faults(net, sc);
    auto assign = energized_map(net, iso.topo, iso.faulted_blocks);
    for (std::size_t b = 0; b < net.blocks.size(); ++b)
        if (net.blocks[b].home_feeder == f1) CHECK(assign[b] == -1);
}

TEST_CASE("cold pickup doubles the realized load of restored blocks") {
    const auto& net = dataset();
    auto sc = manual_scenario(net, {switch_line(net, "S1_3")});
    ScenarioEngine eng(net, sc);
    auto st = eng.initial_state();
    CHECK(st.step == 0);

    int n18 = net.node_index("18");
    int n1 = net.node_index("1");
    CHECK(st.measured_kw[n18] == 0.0);  // islanded
    CHECK(st.measured_kw[n1] ==
          doctest::Approx(net.nodes[n1].peak_active_kw));  // unit noise, never cold

    // back-feed the tail through the TS1 tie
    StepDecision dec;
    dec.close_switch = net.switch_index("TS1");
    auto st1 = eng.apply_decision_and_measure(st, dec);
    CHECK(st1.step == 1);
    int b18 = net.block_of_node("18");
    CHECK(st1.assign[b18] == net.feeder_index("F2"));
    CHECK(eng.restored_at(b18) == 1);
    CHECK(st1.measured_kw[n18] ==
          doctest::Approx(2.0 * net.nodes[n18].peak_active_kw));  // surge factor 2
}

TEST_CASE("DER reconnects a fixed delay after re-energization") {
    const auto& net = dataset();
    auto sc = manual_scenario(net, {switch_line(net, "S1_3")});
    int b18 = net.block_of_node("18");
    sc.ders.push_back({b18, 0.25, 6});
    ScenarioEngine eng(net, sc);
    auto st = eng.initial_state();
    CHECK(!eng.der_online(b18, 0));

    StepDecision close_tie;
    close_tie.close_switch = net.switch_index("TS1");
    st = eng.apply_decision_and_measure(st, close_tie);  // restored at step 1
    for (int t = st.step; t < 6; ++t) st = eng.apply_decision_and_measure(st, {});
    CHECK(st.step == 6);
    CHECK(!eng.der_online(b18, 6));  // 1 + 6 = 7 is the first online step

    int n18 = net.node_index("18");
    double peak = net.nodes[n18].peak_active_kw;
    CHECK(st.measured_kw[n18] == doctest::Approx(2.0 * peak));
    st = eng.apply_decision_and_measure(st, {});
    CHECK(eng.der_online(b18, 7));
    CHECK(st.measured_kw[n18] == doctest::Approx(2.0 * peak * 0.75));
    // once online, stays online
    st = eng.apply_decision_and_measure(st, {});
    CHECK(eng.der_online(b18, 8));
}

TEST_CASE("empty decision only advances time and re-measures") {
    const auto& net = dataset();
    auto sc = manual_scenario(net, {switch_line(net, "S1_3")});
    ScenarioEngine eng(net, sc);
    auto st = eng.initial_state();
    auto st1 = eng.apply_decision_and_measure(st, {});
    CHECK(st1.step == 1);
    CHECK(st1.topo == st.topo);
    CHECK(st1.assign == st.assign);
}

TEST_CASE("invalid switch preconditions are rejected") {
    const auto& net = dataset();
    auto sc = manual_scenario(net, {switch_line(net, "S1_3")});
    ScenarioEngine eng(net, sc);
    auto st = eng.initial_state();

    StepDecision bad_open;
    bad_open.open_switch = net.switch_index("S1_3");  // isolation already opened it
    CHECK_THROWS_AS(eng.apply_decision_and_measure(st, bad_open), ModelError);

    StepDecision bad_close;
    bad_close.close_switch = net.switch_index("S2_1");  // normally closed, still closed
    REQUIRE(st.topo.closed[bad_close.close_switch]);
    CHECK_THROWS_AS(eng.apply_decision_and_measure(st, bad_close), ModelError);
}

TEST_CASE("transfer pair preserves energization while changing feeders") {
    const auto& net = dataset();
    Scenario sc = manual_scenario(net, {});
    ScenarioEngine eng(net, sc);
    auto st = eng.initial_state();
    int b7 = net.block_of_node("23");
    REQUIRE(st.assign[b7] == net.feeder_index("F1"));

    StepDecision dec;
    dec.open_switch = net.switch_index("S1_6");
    dec.close_switch = net.switch_index("TS1");
    auto st1 = eng.apply_decision_and_measure(st, dec);
    CHECK(st1.assign[b7] == net.feeder_index("F2"));
    for (std::size_t b = 0; b < net.blocks.size(); ++b)
        CHECK((st1.assign[b] >= 0) == (st.assign[b] >= 0));
}

TEST_CASE("forecast is worst-case for dark blocks and AMI-driven afterwards") {
    const auto& net = dataset();
    auto sc = manual_scenario(net, {switch_line(net, "S1_3")});
    for (double& v : sc.block_noise) v = 0.8;
    ScenarioEngine eng(net, sc);
    auto st = eng.initial_state();

    auto fc = eng.make_forecast(st, 0, 3);
    REQUIRE(fc.steps() == 3);
    int n18 = net.node_index("18");
    int n1 = net.node_index("1");
    // dark block: cold-pickup-scaled peak, noise unknown to the controller
    CHECK(fc.p_kw[0][n18] == doctest::Approx(2.0 * net.nodes[n18].peak_active_kw));
    // energized block: the measurement, which includes the noise
    CHECK(fc.p_kw[0][n1] == doctest::Approx(0.8 * net.nodes[n1].peak_active_kw));
    CHECK(fc.p_kw[2] == fc.p_kw[0]);  // constant over the window

    StepDecision dec;
    dec.close_switch = net.switch_index("TS1");
    st = eng.apply_decision_and_measure(st, dec);
    auto fc1 = eng.make_forecast(st, 1, 2);
    // restored block now forecast at its measured (surged, noisy) level
    CHECK(fc1.p_kw[0][n18] == doctest::Approx(2.0 * 0.8 * net.nodes[n18].peak_active_kw));
}

TEST_CASE("scenario documents round-trip exactly") {
    const auto& net = dataset();
    ScenarioConfig cfg;
    cfg.num_faults = 4;
    cfg.seed = 99;
    auto sc = generate_scenario(net, cfg);
    std::string text = serialize_scenario(net, sc);
    auto back = load_scenario(net, text);
    CHECK(serialize_scenario(net, back) == text);
    CHECK(back.faults.size() == sc.faults.size());
    for (std::size_t i = 0; i < sc.faults.size(); ++i)
        CHECK(back.faults[i].line == sc.faults[i].line);
}

TEST_CASE("malformed scenario documents are rejected") {
    const auto& net = dataset();
    CHECK_THROWS_AS(load_scenario(net, "not json"), SchemaError);
    CHECK_THROWS_AS(load_scenario(net, "{}"), SchemaError);
    CHECK_THROWS_AS(
        load_scenario(net, R"({"config":{"num_faults":1,"clpu_factor":2,
          "der_penetration":0.2,"delay_min":6,"delay_max":12,"seed":1},
          "faults":[{"from":"nope","to":"13"}]})"),
        SchemaError);
}
