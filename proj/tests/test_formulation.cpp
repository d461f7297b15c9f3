#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "restore/formulation.hpp"
#include "restore/milp.hpp"
#include "restore/netmodel.hpp"

using namespace restore;
using namespace restore::net;
using namespace restore::formulation;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Two feeders on one transformer. Blocks: B1{s1,a} (source of F1),
// B2{b} reachable by both feeders, B3{s2,c} (source of F2).
std::string two_feeder_doc(double f2_cap, double t1_cap) {
    std::ostringstream ss;
    ss << R"({
  "base_kv": 4.16, "base_mva": 1.0,
  "nodes": [{"id":"s1","peak_active_kw":0.0},
            {"id":"a","peak_active_kw":100.0},
            {"id":"b","peak_active_kw":80.0},
            {"id":"s2","peak_active_kw":0.0},
            {"id":"c","peak_active_kw":60.0}],
  "lines": [{"from":"s1","to":"a","r_pu":0.001,"x_pu":0.002},
            {"from":"a","to":"b","r_pu":0.002,"x_pu":0.004,"switch_id":"sw1"},
            {"from":"s2","to":"c","r_pu":0.001,"x_pu":0.002},
            {"from":"c","to":"b","r_pu":0.002,"x_pu":0.004,"switch_id":"tie"}],
  "switches": [{"id":"sw1","normally_closed":true},{"id":"tie","normally_closed":false}],
  "feeders": [{"id":"F1","source_node":"s1","transformer_id":"T1",
               "p_max_kw":400.0,"q_max_kvar":140.0},
              {"id":"F2","source_node":"s2","transformer_id":"T1",
               "p_max_kw":)"
       << f2_cap << R"(,"q_max_kvar":140.0}],
  "transformers": [{"id":"T1","p_max_kw":)"
       << t1_cap << R"(,"q_max_kvar":350.0}]
})";
    return ss.str();
}

LoadForecast flat_forecast(const NetworkModel& net, int first_step, int steps,
                           double q_ratio = 0.3) {
    LoadForecast fc;
    fc.first_step = first_step;
    for (int t = 0; t < steps; ++t) {
        std::vector<double> p(net.nodes.size()), q(net.nodes.size());
        for (std::size_t i = 0; i < net.nodes.size(); ++i) {
            p[i] = net.nodes[i].peak_active_kw;
            q[i] = p[i] * q_ratio;
        }
        fc.p_kw.push_back(p);
        fc.q_kvar.push_back(q);
    }
    return fc;
}

// Entry state after the fault in B1 has been isolated: sw1 and tie open,
// F2 still carries its own section.
SystemState isolated_state(const NetworkModel& net, const std::set<int>& faulted) {
    SystemState st;
    st.topo = net.normal_topology();
    for (int b : faulted)
        for (auto [nb, s] : net.blocks[b].boundary) {
            (void)nb;
            st.topo.closed[s] = false;
        }
    st.assign = energized_map(net, st.topo, faulted);
    st.measured_kw.assign(net.nodes.size(), 0.0);
    return st;
}

// ---------------------------------------------------------------------------
// Exhaustive reference: enumerate every legal switching sequence over the
// window and score it with the same reward/penalty accounting and the
// independent physics evaluator. Small networks only.
// ---------------------------------------------------------------------------
struct BruteForce {
    const NetworkModel& net;
    const LoadForecast& fc;
    const WindowSpec& win;
    const std::set<int>& faulted;
    double best = -1e18;

    double node_p(int t, int i) const {
        return fc.p_kw[win.start_step - fc.first_step + t][i];
    }

    bool valid_state(const Topology& topo, const std::vector<int>& assign,
                     const std::vector<int>& prev_assign, int t) const {
        if (!is_radial(net, topo)) return false;
        // never close into a faulted section while the far side is energized
        for (int s = 0; s < static_cast<int>(net.switches.size()); ++s) {
            if (!topo.closed[s]) continue;
            int ba = net.switches[s].block_a, bb = net.switches[s].block_b;
            if (faulted.count(ba) && !faulted.count(bb) && assign[bb] >= 0) return false;
            if (faulted.count(bb) && !faulted.count(ba) && assign[ba] >= 0) return false;
        }
        for (int b = 0; b < static_cast<int>(net.blocks.size()); ++b) {
            const auto& fb = net.blocks[b].adjacent_feeders;
            if (assign[b] >= 0 &&
                std::find(fb.begin(), fb.end(), assign[b]) == fb.end())
                return false;
            if (prev_assign[b] >= 0 && assign[b] < 0) return false;  // monotone service
        }
        std::vector<double> p(net.nodes.size()), q(net.nodes.size());
        for (std::size_t i = 0; i < net.nodes.size(); ++i) {
            p[i] = fc.p_kw[win.start_step - fc.first_step + t][i];
            q[i] = fc.q_kvar[win.start_step - fc.first_step + t][i];
        }
        auto rep = evaluate_ground_truth_feasibility(net, topo, assign, p, q, win.v0,
                                                     win.v_min, win.v_max, 1e-9);
        return rep.violations.empty();
    }

    void recurse(int t, const Topology& topo, const std::vector<int>& assign, double acc) {
        if (t == win.length) {
            best = std::max(best, acc);
            return;
        }
        const int S = static_cast<int>(net.switches.size());
        for (int o = -1; o < S; ++o) {
            if (o >= 0 && !topo.closed[o]) continue;
            for (int c = -1; c < S; ++c) {
                if (c >= 0 && topo.closed[c]) continue;
                Topology nt = topo;
                if (o >= 0) nt.closed[o] = false;
                if (c >= 0) nt.closed[c] = true;
                if (!is_radial(net, nt)) continue;
                auto na = energized_map(net, nt, faulted);
                if (!valid_state(nt, na, assign, t)) continue;
                double reward = 0.0;
                for (int b = 0; b < static_cast<int>(net.blocks.size()); ++b)
                    if (na[b] >= 0 && assign[b] < 0 && !faulted.count(b))
                        for (int i : net.blocks[b].node_ids) reward += node_p(t, i);
                double cost = win.alpha * ((o >= 0 ? 1 : 0) + (c >= 0 ? 1 : 0));
                recurse(t + 1, nt, na, acc + reward - cost);
            }
        }
    }

    double solve(const SystemState& entry) {
        best = -1e18;
        recurse(0, entry.topo, entry.assign, 0.0);
        return best;
    }
};

}  // namespace

TEST_CASE("every tagged row family appears exactly once in the tag set") {
    auto net = load_network(two_feeder_doc(300.0, 500.0));
    std::set<int> faulted = {net.block_of_node("a")};
    auto st = isolated_state(net, faulted);
    auto fc = flat_forecast(net, 0, 2);
    WindowSpec win;
    win.length = 2;
    win.alpha = 1.0;
    win.big_m = 1000.0;
    win.safeguard = SafeguardSpec{50.0, 0.1, 0.0};
    auto wm = build_window_model(net, st, fc, win, faulted);

    std::set<std::string> tags;
    for (const auto& c : wm.model.constraints()) tags.insert(c.tag);
    std::set<std::string> expected;
    for (int k = 1; k <= 44; ++k) {
        if (k == 37 || k == 38) continue;  // objective terms, not rows
        expected.insert("Eq" + std::to_string(k));
    }
    expected.insert("safeguard");
    CHECK(tags == expected);
}

TEST_CASE("islanded block is restored through the tie with one close action") {
    auto net = load_network(two_feeder_doc(300.0, 500.0));
    std::set<int> faulted = {net.block_of_node("a")};
    auto st = isolated_state(net, faulted);
    REQUIRE(st.assign[net.block_of_node("b")] == -1);
    REQUIRE(st.assign[net.block_of_node("c")] == net.feeder_index("F2"));
    auto fc = flat_forecast(net, 0, 2);
    WindowSpec win;
    win.length = 2;
    win.alpha = 1.0;
    win.big_m = 1000.0;
    auto wm = build_window_model(net, st, fc, win, faulted);

    auto sol = milp::solve(wm.model);
    REQUIRE(sol.status == milp::SolveStatus::Optimal);
    CHECK(sol.objective_value == doctest::Approx(79.0).epsilon(1e-9));
    CHECK(milp::verify_solution(wm.model, sol.values, 1e-6).empty());

    // the tie must end up closed and B2 assigned to F2 by the final step
    int tie = net.switch_index("tie");
    int b2 = net.block_of_node("b");
    int f2 = net.feeder_index("F2");
    CHECK(sol.values[wm.index.gamma(1, tie)] == doctest::Approx(1.0));
    CHECK(sol.values[wm.index.z(1, b2, f2)] == doctest::Approx(1.0));
    // faulted block stays dark, source block of F2 keeps its feeder
    CHECK(sol.values[wm.index.z(1, net.block_of_node("a"), net.feeder_index("F1"))] ==
          doctest::Approx(0.0));
    CHECK(sol.values[wm.index.z(1, net.block_of_node("c"), f2)] == doctest::Approx(1.0));
}

TEST_CASE("decode_first_step mirrors the chosen actions") {
    auto net = load_network(two_feeder_doc(300.0, 500.0));
    std::set<int> faulted = {net.block_of_node("a")};
    auto st = isolated_state(net, faulted);
    auto fc = flat_forecast(net, 0, 1);
    WindowSpec win;
    win.length = 1;  // single step: restoring now is the only optimum
    win.alpha = 1.0;
    win.big_m = 1000.0;
    auto wm = build_window_model(net, st, fc, win, faulted);
    auto sol = milp::solve(wm.model);
    REQUIRE(sol.status == milp::SolveStatus::Optimal);
    CHECK(sol.objective_value == doctest::Approx(79.0).epsilon(1e-9));
    auto dec = decode_first_step(sol, wm.index, net);
    CHECK(dec.open_switch == -1);
    CHECK(dec.close_switch == net.switch_index("tie"));
    REQUIRE(dec.restored_blocks.size() == 1);
    CHECK(dec.restored_blocks[0].first == net.block_of_node("b"));
    CHECK(dec.restored_blocks[0].second == net.feeder_index("F2"));
}

TEST_CASE("restoration is refused when the backup feeder lacks capacity") {
    // F2 head would carry 60 + 80 = 140 kW but is capped at 100 kW.
    auto net = load_network(two_feeder_doc(100.0, 500.0));
    std::set<int> faulted = {net.block_of_node("a")};
    auto st = isolated_state(net, faulted);
    auto fc = flat_forecast(net, 0, 2);
    WindowSpec win;
    win.length = 2;
    win.alpha = 1.0;
    win.big_m = 1000.0;
    auto wm = build_window_model(net, st, fc, win, faulted);
    auto sol = milp::solve(wm.model);
    REQUIRE(sol.status == milp::SolveStatus::Optimal);
    CHECK(sol.objective_value == doctest::Approx(0.0));

    // transformer-level congestion blocks it the same way
    auto net2 = load_network(two_feeder_doc(300.0, 130.0));
    auto st2 = isolated_state(net2, faulted);
    auto wm2 = build_window_model(net2, st2, fc, win, faulted);
    auto sol2 = milp::solve(wm2.model);
    REQUIRE(sol2.status == milp::SolveStatus::Optimal);
    CHECK(sol2.objective_value == doctest::Approx(0.0));
}

TEST_CASE("objective is inert to the big-M scale") {
    auto net = load_network(two_feeder_doc(300.0, 500.0));
    std::set<int> faulted = {net.block_of_node("a")};
    auto st = isolated_state(net, faulted);
    auto fc = flat_forecast(net, 0, 2);
    WindowSpec win;
    win.length = 2;
    win.alpha = 1.0;
    win.big_m = 1000.0;
    auto a = milp::solve(build_window_model(net, st, fc, win, faulted).model);
    win.big_m = 2000.0;
    auto b = milp::solve(build_window_model(net, st, fc, win, faulted).model);
    REQUIRE(a.status == milp::SolveStatus::Optimal);
    REQUIRE(b.status == milp::SolveStatus::Optimal);
    CHECK(a.objective_value == doctest::Approx(b.objective_value).epsilon(1e-9));
}

TEST_CASE("safeguard row: attainable floor is a no-op, unattainable floor is infeasible") {
    auto net = load_network(two_feeder_doc(300.0, 500.0));
    std::set<int> faulted = {net.block_of_node("a")};
    auto st = isolated_state(net, faulted);
    auto fc = flat_forecast(net, 0, 2);
    WindowSpec win;
    win.length = 2;
    win.alpha = 1.0;
    win.big_m = 1000.0;
    auto base = milp::solve(build_window_model(net, st, fc, win, faulted).model);
    REQUIRE(base.status == milp::SolveStatus::Optimal);

    win.safeguard = SafeguardSpec{base.objective_value, 0.0, 0.0};
    auto tight = milp::solve(build_window_model(net, st, fc, win, faulted).model);
    REQUIRE(tight.status == milp::SolveStatus::Optimal);
    CHECK(tight.objective_value == doctest::Approx(base.objective_value).epsilon(1e-9));

    win.safeguard = SafeguardSpec{base.objective_value + 10.0, 0.0, 0.0};
    auto broken = milp::solve(build_window_model(net, st, fc, win, faulted).model);
    CHECK(broken.status == milp::SolveStatus::Infeasible);

    // banked reward shifts the floor by the same amount
    win.safeguard = SafeguardSpec{base.objective_value + 10.0, 0.0, 10.0};
    auto banked = milp::solve(build_window_model(net, st, fc, win, faulted).model);
    REQUIRE(banked.status == milp::SolveStatus::Optimal);
}

TEST_CASE("window optimum matches exhaustive sequence enumeration") {
    struct Case {
        double f2_cap, t1_cap, alpha;
        int length;
    };
    const Case cases[] = {
        {300.0, 500.0, 1.0, 1}, {300.0, 500.0, 1.0, 2}, {300.0, 500.0, 1.0, 3},
        {100.0, 500.0, 1.0, 2}, {300.0, 130.0, 0.5, 2}, {300.0, 500.0, 25.0, 2},
    };
    for (const auto& cs : cases) {
        CAPTURE(cs.f2_cap);
        CAPTURE(cs.t1_cap);
        CAPTURE(cs.length);
        auto net = load_network(two_feeder_doc(cs.f2_cap, cs.t1_cap));
        std::set<int> faulted = {net.block_of_node("a")};
        auto st = isolated_state(net, faulted);
        auto fc = flat_forecast(net, 0, cs.length);
        WindowSpec win;
        win.length = cs.length;
        win.alpha = cs.alpha;
        win.big_m = 1000.0;
        auto wm = build_window_model(net, st, fc, win, faulted);
        auto sol = milp::solve(wm.model);
        REQUIRE(sol.status == milp::SolveStatus::Optimal);
        BruteForce bf{net, fc, win, faulted};
        double ref = bf.solve(st);
        CHECK(sol.objective_value == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("voltage chain reproduces the linearized drop exactly") {
    // single feeder, all served: V_a = v0 - (r*P + x*Q)/v0 with P,Q in pu
    const char* doc = R"({
      "base_kv": 4.16, "base_mva": 1.0,
      "nodes": [{"id":"s","peak_active_kw":0.0},
                {"id":"a","peak_active_kw":200.0,"peak_reactive_kvar":100.0}],
      "lines": [{"from":"s","to":"a","r_pu":0.01,"x_pu":0.02}],
      "switches": [],
      "feeders": [{"id":"F1","source_node":"s","transformer_id":"T1",
                   "p_max_kw":400.0,"q_max_kvar":200.0}],
      "transformers": [{"id":"T1","p_max_kw":400.0,"q_max_kvar":200.0}]
    })";
    auto net = load_network(doc);
    SystemState st;
    st.topo = net.normal_topology();
    st.assign = energized_map(net, st.topo, {});
    st.measured_kw.assign(net.nodes.size(), 0.0);
    LoadForecast fc;
    fc.first_step = 0;
    fc.p_kw = {{0.0, 200.0}};
    fc.q_kvar = {{0.0, 100.0}};
    WindowSpec win;
    win.length = 1;
    win.alpha = 1.0;
    win.big_m = 1000.0;
    auto wm = build_window_model(net, st, fc, win, {});
    auto sol = milp::solve(wm.model);
    REQUIRE(sol.status == milp::SolveStatus::Optimal);
    int f = net.feeder_index("F1");
    CHECK(sol.values[wm.index.volt(0, net.node_index("s"), f)] == doctest::Approx(1.0));
    // drop = (0.01*0.2 + 0.02*0.1)/1.0 = 0.004
    CHECK(sol.values[wm.index.volt(0, net.node_index("a"), f)] ==
          doctest::Approx(0.996).epsilon(1e-9));
    CHECK(sol.values[wm.index.feeder_p(0, f)] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(sol.values[wm.index.feeder_q(0, f)] == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("physics evaluator flags overload and undervoltage") {
    auto net = load_network(two_feeder_doc(300.0, 500.0));
    auto topo = net.normal_topology();
    auto assign = energized_map(net, topo, {});
    std::vector<double> p = {0.0, 100.0, 80.0, 0.0, 60.0};
    std::vector<double> q = {0.0, 30.0, 24.0, 0.0, 18.0};
    auto ok = evaluate_ground_truth_feasibility(net, topo, assign, p, q);
    CHECK(ok.violations.empty());
    CHECK(ok.feeder_p_kw[net.feeder_index("F1")] == doctest::Approx(180.0));
    CHECK(ok.transformer_p_kw[0] == doctest::Approx(240.0));

    // push F1 past its 400 kW limit
    std::vector<double> p2 = {0.0, 500.0, 80.0, 0.0, 60.0};
    auto over = evaluate_ground_truth_feasibility(net, topo, assign, p2, q);
    bool saw_feeder = false, saw_transformer = false;
    for (const auto& v : over.violations) {
        if (v.kind == "feeder_p") saw_feeder = true;
        if (v.kind == "transformer_p") saw_transformer = true;
    }
    CHECK(saw_feeder);
    CHECK(saw_transformer);
    CHECK(over.max_feeder_util > 1.0);

    // huge reactive draw on a long line pulls voltage below the floor
    std::vector<double> q3 = {0.0, 30000.0, 24.0, 0.0, 18.0};
    auto low = evaluate_ground_truth_feasibility(net, topo, assign, p, q3);
    bool saw_low = false;
    for (const auto& v : low.violations) saw_low |= v.kind == "voltage_low";
    CHECK(saw_low);
}

TEST_CASE("region trees on the bundled dataset") {
    auto net = load_network(read_file(std::string(DATA_DIR) + "/ieee123.json"));
    auto regions = build_regions(net);
    REQUIRE(regions.size() == 8);
    for (int f = 0; f < 8; ++f) {
        const auto& rg = regions[f];
        // 7 home blocks plus everything back-feedable through the two ring
        // ties: both neighbors' six non-substation blocks
        CHECK(rg.blocks.size() == 19);
        CHECK(rg.blocks[0] == net.nodes[net.feeders[f].source_node].block);
        CHECK(rg.parent_block[0] == -1);
        CHECK(rg.serving_switch[0] == -1);
        std::size_t expected_nodes = 0;
        for (int b : rg.blocks) expected_nodes += net.blocks[b].node_ids.size();
        CHECK(rg.nodes.size() == expected_nodes);
        for (std::size_t k = 1; k < rg.blocks.size(); ++k) {
            CHECK(rg.block_pos[rg.parent_block[k]] >= 0);
            int s = rg.serving_switch[k];
            REQUIRE(s >= 0);
            bool touches = net.switches[s].block_a == rg.blocks[k] ||
                           net.switches[s].block_b == rg.blocks[k];
            CHECK(touches);
        }
    }
}

TEST_CASE("bundled dataset: mid-feeder fault is restored through the tie ring") {
    auto net = load_network(read_file(std::string(DATA_DIR) + "/ieee123.json"));
    // fault in the middle of F1; downstream blocks go dark
    std::set<int> faulted = {net.block_of_node("13")};
    auto st = isolated_state(net, faulted);
    int dark = 0;
    for (int b = 0; b < static_cast<int>(net.blocks.size()); ++b)
        if (st.assign[b] < 0) ++dark;
    CHECK(dark == 4);  // faulted block plus 18, 21, 23 downstream

    auto fc = flat_forecast(net, 0, 2);
    WindowSpec win;
    win.length = 2;
    win.alpha = 2.0;
    win.big_m = 1.2 * 3490.0;
    auto wm = build_window_model(net, st, fc, win, faulted);
    auto sol = milp::solve(wm.model);
    REQUIRE(sol.status == milp::SolveStatus::Optimal);
    CHECK(milp::verify_solution(wm.model, sol.values, 1e-6).empty());
    // The whole stranded tail (nodes 18, 21, 23: 75+65+55 kW) back-feeds
    // through a neighbor's tie; their sectionalizers are still closed, so a
    // single tie closing re-energizes all three at once.
    CHECK(sol.objective_value == doctest::Approx(195.0 - win.alpha).epsilon(1e-9));
    int b23 = net.block_of_node("23");
    int f2 = net.feeder_index("F2");
    int f5 = net.feeder_index("F5");
    bool on_f2 = sol.values[wm.index.z(1, b23, f2)] > 0.5;
    bool on_f5 = sol.values[wm.index.z(1, b23, f5)] > 0.5;
    CHECK((on_f2 || on_f5));
}

TEST_CASE("decode_first_step rejects malformed solutions") {
    auto net = load_network(two_feeder_doc(300.0, 500.0));
    std::set<int> faulted = {net.block_of_node("a")};
    auto st = isolated_state(net, faulted);
    auto fc = flat_forecast(net, 0, 1);
    WindowSpec win;
    win.length = 1;
    win.alpha = 1.0;
    win.big_m = 1000.0;
    auto wm = build_window_model(net, st, fc, win, faulted);
    auto sol = milp::solve(wm.model);
    REQUIRE(sol.status == milp::SolveStatus::Optimal);

    auto bad = sol;
    bad.values[wm.index.open_act(0, net.switch_index("sw1"))] = 0.5;
    CHECK_THROWS_AS(decode_first_step(bad, wm.index, net), ModelError);

    auto bad2 = sol;
    bad2.values[wm.index.open_act(0, net.switch_index("sw1"))] = 1.0;
    bad2.values[wm.index.open_act(0, net.switch_index("tie"))] = 1.0;
    CHECK_THROWS_AS(decode_first_step(bad2, wm.index, net), ModelError);
}

TEST_CASE("build_window_model validates its inputs") {
    auto net = load_network(two_feeder_doc(300.0, 500.0));
    std::set<int> faulted = {net.block_of_node("a")};
    auto st = isolated_state(net, faulted);
    WindowSpec win;
    win.length = 2;
    win.big_m = 1000.0;
    auto short_fc = flat_forecast(net, 0, 1);  // too short for the window
    CHECK_THROWS_AS(build_window_model(net, st, short_fc, win, faulted), ModelError);
    auto fc = flat_forecast(net, 0, 2);
    SystemState wrong = st;
    wrong.assign.pop_back();
    CHECK_THROWS_AS(build_window_model(net, wrong, fc, win, faulted), ModelError);
}
