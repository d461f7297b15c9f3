#include "restore/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace restore::formulation {

using milp::Model;
using milp::Sense;
using milp::VarKind;
using net::NetworkModel;

std::vector<FeederRegion> build_regions(const NetworkModel& net) {
    const int B = static_cast<int>(net.blocks.size());
    const int N = static_cast<int>(net.nodes.size());
    std::vector<FeederRegion> regions(net.feeders.size());

    for (int f = 0; f < static_cast<int>(net.feeders.size()); ++f) {
        FeederRegion& rg = regions[f];
        rg.block_pos.assign(B, -1);
        rg.node_pos.assign(N, -1);

        std::vector<bool> candidate(B, false);
        int n_candidates = 0;
        for (int b = 0; b < B; ++b) {
            const auto& fb = net.blocks[b].adjacent_feeders;
            if (std::find(fb.begin(), fb.end(), f) != fb.end()) {
                candidate[b] = true;
                ++n_candidates;
            }
        }
        int src_block = net.nodes[net.feeders[f].source_node].block;
        if (!candidate[src_block])
            throw ModelError("feeder '" + net.feeders[f].id +
                             "': source block missing from its own candidate set");

        // Serving tree over blocks (BFS, lowest switch index first).
        std::queue<int> q;
        q.push(src_block);
        rg.block_pos[src_block] = 0;
        rg.blocks.push_back(src_block);
        rg.parent_block.push_back(-1);
        rg.serving_switch.push_back(-1);
        while (!q.empty()) {
            int b = q.front();
            q.pop();
            auto edges = net.blocks[b].boundary;
            std::sort(edges.begin(), edges.end(),
                      [](auto& a, auto& c) { return a.second < c.second; });
            for (auto [nb, s] : edges) {
                if (!candidate[nb] || rg.block_pos[nb] >= 0) continue;
                rg.block_pos[nb] = static_cast<int>(rg.blocks.size());
                rg.blocks.push_back(nb);
                rg.parent_block.push_back(b);
                rg.serving_switch.push_back(s);
                q.push(nb);
            }
        }
        if (static_cast<int>(rg.blocks.size()) != n_candidates)
            throw ModelError("feeder '" + net.feeders[f].id +
                             "': candidate block unreachable from the source");

        // Serving tree over nodes: solid lines inside region blocks plus the
        // serving switch lines.
        std::vector<bool> line_ok(net.lines.size(), false);
        for (int l = 0; l < static_cast<int>(net.lines.size()); ++l) {
            const auto& ln = net.lines[l];
            if (ln.is_switch()) continue;
            if (rg.block_pos[net.nodes[ln.from].block] >= 0) line_ok[l] = true;
        }
        for (std::size_t k = 0; k < rg.blocks.size(); ++k)
            if (rg.serving_switch[k] >= 0)
                line_ok[net.switches[rg.serving_switch[k]].line] = true;

        std::vector<std::vector<int>> incident(N);
        for (int l = 0; l < static_cast<int>(net.lines.size()); ++l)
            if (line_ok[l]) {
                incident[net.lines[l].from].push_back(l);
                incident[net.lines[l].to].push_back(l);
            }

        int src = net.feeders[f].source_node;
        rg.node_pos[src] = 0;
        rg.nodes.push_back(src);
        rg.parent_line.push_back(-1);
        rg.child_lines.emplace_back();
        std::queue<int> nq;
        nq.push(src);
        while (!nq.empty()) {
            int i = nq.front();
            nq.pop();
            for (int l : incident[i]) {
                int j = net.lines[l].from == i ? net.lines[l].to : net.lines[l].from;
                if (rg.node_pos[j] >= 0) continue;
                rg.child_lines[rg.node_pos[i]].push_back(l);
                rg.node_pos[j] = static_cast<int>(rg.nodes.size());
                rg.nodes.push_back(j);
                rg.parent_line.push_back(l);
                rg.child_lines.emplace_back();
                nq.push(j);
            }
        }
        for (int b : rg.blocks)
            for (int i : net.blocks[b].node_ids)
                if (rg.node_pos[i] < 0)
                    throw ModelError("feeder '" + net.feeders[f].id + "': node '" +
                                     net.nodes[i].id + "' unreachable inside its region");
    }
    return regions;
}


/// Everything build_window_model needs repeatedly; rows are appended through
/// small helpers so every family stays tagged.
struct WindowBuilder {
    const NetworkModel& net;
    const SystemState& state;
    const LoadForecast& fc;
    const WindowSpec& win;
    const std::set<int>& faulted;
    const std::vector<FeederRegion>& regions;

    Model model;
    VarIndex ix;
    int B, Fn, S, L;
    double pb;                  // kW per pu
    double m_kw, m_pu, big_n;
    std::vector<std::vector<double>> block_kw;  // [t][b] forecast block demand
    std::vector<bool> restorable;               // islanded at entry and healthy

    WindowBuilder(const NetworkModel& n, const SystemState& st, const LoadForecast& f,
            const WindowSpec& w, const std::set<int>& flt, const std::vector<FeederRegion>& rg)
        : net(n), state(st), fc(f), win(w), faulted(flt), regions(rg) {
        B = static_cast<int>(net.blocks.size());
        Fn = static_cast<int>(net.feeders.size());
        S = static_cast<int>(net.switches.size());
        L = win.length;
        pb = net.power_base_kw();
        m_kw = win.big_m;
        m_pu = win.big_m / pb;
        big_n = static_cast<double>(B);

        if (L < 1) throw ModelError("window length must be >= 1");
        if (win.alpha <= 0.0) throw ModelError("switching cost must be positive");
        if (fc.steps() < L || fc.first_step > win.start_step ||
            fc.first_step + fc.steps() < win.start_step + L)
            throw ModelError("forecast does not cover the window");

        block_kw.assign(L, std::vector<double>(B, 0.0));
        for (int t = 0; t < L; ++t) {
            const auto& pk = fc.p_kw[win.start_step - fc.first_step + t];
            for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i)
                block_kw[t][net.nodes[i].block] += pk[i];
        }
        restorable.assign(B, false);
        for (int b = 0; b < B; ++b)
            restorable[b] = state.assign[b] < 0 && !faulted.count(b);
    }

    double fp(int t, int i) const {  // forecast p at node, pu
        return fc.p_kw[win.start_step - fc.first_step + t][i] / pb;
    }
    double fq(int t, int i) const {
        return fc.q_kvar[win.start_step - fc.first_step + t][i] / pb;
    }
    double fp_kw(int t, int i) const {
        return fc.p_kw[win.start_step - fc.first_step + t][i];
    }

    void row(std::vector<std::pair<VarId, double>> terms, Sense s, double rhs,
             const char* tag) {
        model.add_constraint(std::move(terms), s, rhs, tag);
    }

    bool entry_energized(int b) const { return state.assign[b] >= 0; }
    double entry_gamma(int s) const { return state.topo.closed[s] ? 1.0 : 0.0; }

    void make_variables();
    void assignment_rows();       // Eq1-Eq3 (+ source/energized pinning)
    void increment_rows();        // Eq4-Eq6, Eq39-Eq44
    void switching_rows();        // Eq7-Eq11
    void topology_rows();         // Eq12-Eq15
    void radiality_rows();        // Eq16-Eq20
    void protection_rows();       // Eq21-Eq25
    void distflow_rows();         // Eq26-Eq36
    void objective_and_safeguard();
};

void WindowBuilder::make_variables() {
    auto name = [](const char* sym, int t, const std::string& a, const std::string& b = "") {
        std::string s = std::string(sym) + "_" + a;
        if (!b.empty()) s += "_" + b;
        return s + "_t" + std::to_string(t);
    };
    for (int t = 0; t < L; ++t) {
        for (int b = 0; b < B; ++b)
            for (int f : net.blocks[b].adjacent_feeders) {
                ix.z_[{t, b, f}] = model.add_binary(
                    name("z", t, net.blocks[b].id, net.feeders[f].id));
                model.set_branch_priority(ix.z_[{t, b, f}], 1);
            }
        for (int b = 0; b < B; ++b) {
            if (!restorable[b]) continue;
            for (int f : net.blocks[b].adjacent_feeders) {
                ix.dz_[{t, b, f}] = model.add_binary(
                    name("dz", t, net.blocks[b].id, net.feeders[f].id));
                model.set_branch_priority(ix.dz_[{t, b, f}], 1);
            }
            ix.db_[{t, b, 0}] =
                model.add_continuous(0.0, m_kw, name("Db", t, net.blocks[b].id));
        }
        ix.d_[{t, 0, 0}] = model.add_continuous(0.0, m_kw, name("D", t, "sum"));
        for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
            if (net.nodes[i].peak_active_kw <= 0.0) continue;
            int b = net.nodes[i].block;
            for (int f : net.blocks[b].adjacent_feeders)
                ix.u_[{t, i, f}] =
                    win.allow_shedding
                        ? model.add_binary(name("u", t, net.nodes[i].id, net.feeders[f].id))
                        : model.add_continuous(
                              0.0, 1.0, name("u", t, net.nodes[i].id, net.feeders[f].id));
        }
        for (int s = 0; s < S; ++s) {
            ix.open_[{t, s, 0}] = model.add_binary(name("do", t, net.switches[s].id));
            ix.close_[{t, s, 0}] = model.add_binary(name("dc", t, net.switches[s].id));
            ix.gamma_[{t, s, 0}] = model.add_binary(name("g", t, net.switches[s].id));
            // actions drive everything else; branch on them first
            model.set_branch_priority(ix.open_[{t, s, 0}], 3);
            model.set_branch_priority(ix.close_[{t, s, 0}], 3);
            model.set_branch_priority(ix.gamma_[{t, s, 0}], 2);
            // tree-membership indicators relax cleanly: with a positive
            // action cost, any integral switch plan admits an integral
            // spanning-forest completion, and the only configurations the
            // relaxation adds (closed cycles) are strictly dominated
            ix.conn_[{t, s, 0}] =
                model.add_continuous(0.0, 1.0, name("G", t, net.switches[s].id));
            ix.flow_[{t, s, 0}] =
                model.add_continuous(0.0, big_n, name("Fab", t, net.switches[s].id));
            ix.flow_[{t, s, 1}] =
                model.add_continuous(0.0, big_n, name("Fba", t, net.switches[s].id));
        }
        for (int f = 0; f < Fn; ++f) {
            double pcap = net.transformers[net.feeders[f].transformer].p_max_kw / pb;
            double qcap = net.transformers[net.feeders[f].transformer].q_max_kvar / pb;
            ix.fp_[{t, f, 0}] = model.add_continuous(0.0, pcap, name("Pf", t, net.feeders[f].id));
            ix.fq_[{t, f, 0}] = model.add_continuous(0.0, qcap, name("Qf", t, net.feeders[f].id));
            const auto& rg = regions[f];
            for (std::size_t k = 0; k < rg.nodes.size(); ++k) {
                int i = rg.nodes[k];
                ix.v_[{t, i, f}] = model.add_continuous(
                    0.0, win.v_max, name("V", t, net.nodes[i].id, net.feeders[f].id));
                if (rg.parent_line[k] < 0) continue;
                int l = rg.parent_line[k];
                ix.sv_[{t, i, f}] = model.add_continuous(
                    0.0, m_pu, name("sv", t, net.nodes[i].id, net.feeders[f].id));
                ix.lp_[{t, l, f}] = model.add_continuous(
                    0.0, pcap, name("P", t, std::to_string(l), net.feeders[f].id));
                ix.lq_[{t, l, f}] = model.add_continuous(
                    0.0, qcap, name("Q", t, std::to_string(l), net.feeders[f].id));
                ix.sp_[{t, l, f}] = model.add_continuous(
                    0.0, m_pu, name("sp", t, std::to_string(l), net.feeders[f].id));
                ix.sq_[{t, l, f}] = model.add_continuous(
                    0.0, m_pu, name("sq", t, std::to_string(l), net.feeders[f].id));
            }
        }
    }
}

void WindowBuilder::assignment_rows() {
    for (int t = 0; t < L; ++t) {
        for (int b = 0; b < B; ++b) {
            std::vector<std::pair<VarId, double>> terms;
            for (int f : net.blocks[b].adjacent_feeders) terms.push_back({ix.z(t, b, f), 1.0});
            bool pinned = entry_energized(b) && !faulted.count(b);
            row(std::move(terms), pinned ? Sense::Eq : Sense::Le, 1.0, "Eq1");
            // a live source block always carries its own feeder
            int f_src = net.blocks[b].source_of_feeder;
            if (f_src >= 0 && !faulted.count(b))
                row({{ix.z(t, b, f_src), 1.0}}, Sense::Eq, 1.0, "Eq1");
        }
        // parent-child ordering along each serving tree
        for (int f = 0; f < Fn; ++f) {
            const auto& rg = regions[f];
            for (std::size_t k = 0; k < rg.blocks.size(); ++k) {
                if (rg.parent_block[k] < 0) continue;
                row({{ix.z(t, rg.blocks[k], f), 1.0}, {ix.z(t, rg.parent_block[k], f), -1.0}},
                    Sense::Le, 0.0, "Eq2");
            }
        }
        // node energization never exceeds block assignment
        for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
            int b = net.nodes[i].block;
            for (int f : net.blocks[b].adjacent_feeders) {
                VarId u = ix.u(t, i, f);
                if (u < 0) continue;
                if (win.allow_shedding)
                    row({{u, 1.0}, {ix.z(t, b, f), -1.0}}, Sense::Le, 0.0, "Eq3");
                else
                    row({{u, 1.0}, {ix.z(t, b, f), -1.0}}, Sense::Eq, 0.0, "Eq3");
            }
        }
    }
}

void WindowBuilder::increment_rows() {
    for (int t = 0; t < L; ++t) {
        std::vector<std::pair<VarId, double>> sum_terms = {{ix.step_reward(t), 1.0}};
        for (int b = 0; b < B; ++b) {
            if (!restorable[b]) continue;
            VarId db = ix.block_reward(t, b);
            sum_terms.push_back({db, -1.0});

            std::vector<std::pair<VarId, double>> cap = {{db, 1.0}};
            std::vector<std::pair<VarId, double>> up = {{db, 1.0}};
            std::vector<std::pair<VarId, double>> lo = {{db, 1.0}};
            std::vector<std::pair<VarId, double>> act_hi = {{db, 1.0}};
            std::vector<std::pair<VarId, double>> act_lo = {{db, 1.0}};
            int nf = 0;
            // the tightest valid big-M for this block's reward linkage is its
            // own forecast demand; anything larger lets the relaxation smear
            // one restoration across several steps
            double mb = block_kw[t][b];
            for (int f : net.blocks[b].adjacent_feeders) {
                VarId dz = ix.dz(t, b, f);
                ++nf;
                for (int i : net.blocks[b].node_ids) {
                    VarId u = ix.u(t, i, f);
                    if (u < 0) continue;
                    cap.push_back({u, -fp_kw(t, i)});
                    up.push_back({u, -fp_kw(t, i)});
                    lo.push_back({u, -fp_kw(t, i)});
                }
                up.push_back({dz, mb});
                lo.push_back({dz, -mb});
                act_hi.push_back({dz, -mb});
                act_lo.push_back({dz, mb});

                // not already energized / not restored twice
                if (t == 0) {
                    row({{dz, 1.0}}, Sense::Le, 1.0 - (entry_energized(b) ? 1.0 : 0.0), "Eq5");
                    row({{dz, 1.0}}, Sense::Le, 1.0 - (state.assign[b] == f ? 1.0 : 0.0),
                        "Eq41");
                } else {
                    std::vector<std::pair<VarId, double>> prev = {{dz, 1.0}};
                    for (int g : net.blocks[b].adjacent_feeders)
                        prev.push_back({ix.z(t - 1, b, g), 1.0});
                    row(std::move(prev), Sense::Le, 1.0, "Eq5");
                    row({{dz, 1.0}, {ix.z(t - 1, b, f), 1.0}}, Sense::Le, 1.0, "Eq41");
                }
                row({{ix.z(t, b, f), 1.0}, {dz, -1.0}}, Sense::Ge, 0.0, "Eq6");
                row({{dz, 1.0}, {ix.z(t, b, f), -1.0}}, Sense::Le, 0.0, "Eq40");
            }
            row(std::move(cap), Sense::Le, 0.0, "Eq4");
            row(std::move(up), Sense::Le, nf * mb, "Eq42");
            row(std::move(lo), Sense::Ge, -nf * mb, "Eq43");
            row(std::move(act_hi), Sense::Le, 0.0, "Eq44");
            row(std::move(act_lo), Sense::Ge, 0.0, "Eq44");
        }
        row(std::move(sum_terms), Sense::Eq, 0.0, "Eq39");
    }
    // each block is counted as restored at most once per window, and stays
    // energized afterwards within the window
    for (int b = 0; b < B; ++b) {
        if (!restorable[b]) continue;
        std::vector<std::pair<VarId, double>> once;
        for (int t = 0; t < L; ++t)
            for (int f : net.blocks[b].adjacent_feeders) once.push_back({ix.dz(t, b, f), 1.0});
        row(std::move(once), Sense::Le, 1.0, "Eq5");
        for (int t = 0; t < L; ++t) {
            std::vector<std::pair<VarId, double>> keep;
            for (int f : net.blocks[b].adjacent_feeders) keep.push_back({ix.z(t, b, f), 1.0});
            for (int h = 0; h <= t; ++h)
                for (int f : net.blocks[b].adjacent_feeders)
                    keep.push_back({ix.dz(h, b, f), -1.0});
            row(std::move(keep), Sense::Ge, 0.0, "Eq6");
        }
    }
}

void WindowBuilder::switching_rows() {
    for (int t = 0; t < L; ++t) {
        std::vector<std::pair<VarId, double>> budget;
        for (int s = 0; s < S; ++s) {
            VarId o = ix.open_act(t, s), c = ix.close_act(t, s), g = ix.gamma(t, s);
            row({{o, 1.0}, {c, 1.0}}, Sense::Le, 1.0, "Eq7");
            budget.push_back({o, 1.0});
            budget.push_back({c, 1.0});
            if (t == 0) {
                row({{g, 1.0}, {o, 1.0}, {c, -1.0}}, Sense::Eq, entry_gamma(s), "Eq9");
                row({{o, 1.0}}, Sense::Le, entry_gamma(s), "Eq10");
                row({{c, 1.0}}, Sense::Le, 1.0 - entry_gamma(s), "Eq11");
            } else {
                VarId gp = ix.gamma(t - 1, s);
                row({{g, 1.0}, {gp, -1.0}, {o, 1.0}, {c, -1.0}}, Sense::Eq, 0.0, "Eq9");
                row({{o, 1.0}, {gp, -1.0}}, Sense::Le, 0.0, "Eq10");
                row({{c, 1.0}, {gp, 1.0}}, Sense::Le, 1.0, "Eq11");
            }
        }
        row(std::move(budget), Sense::Le, 2.0, "Eq8");
        // a step is one coordinated pair: at most one opening, one closing
        std::vector<std::pair<VarId, double>> opens, closes;
        for (int s = 0; s < S; ++s) {
            opens.push_back({ix.open_act(t, s), 1.0});
            closes.push_back({ix.close_act(t, s), 1.0});
        }
        row(std::move(opens), Sense::Le, 1.0, "Eq8");
        row(std::move(closes), Sense::Le, 1.0, "Eq8");
    }
}

void WindowBuilder::topology_rows() {
    for (int t = 0; t < L; ++t) {
        for (int s = 0; s < S; ++s) {
            int ba = net.switches[s].block_a, bb = net.switches[s].block_b;
            VarId g = ix.gamma(t, s);
            const auto& fa = net.blocks[ba].adjacent_feeders;
            const auto& fb = net.blocks[bb].adjacent_feeders;
            std::vector<std::pair<VarId, double>> block_a_terms, block_b_terms;
            for (int f : fa) {
                bool shared = std::find(fb.begin(), fb.end(), f) != fb.end();
                if (shared) {
                    row({{ix.z(t, ba, f), 1.0}, {ix.z(t, bb, f), 1.0}, {g, -1.0}}, Sense::Le,
                        1.0, "Eq12");
                    row({{ix.z(t, ba, f), 1.0}, {ix.z(t, bb, f), -1.0}, {g, 1.0}}, Sense::Le,
                        1.0, "Eq13");
                    row({{ix.z(t, bb, f), 1.0}, {ix.z(t, ba, f), -1.0}, {g, 1.0}}, Sense::Le,
                        1.0, "Eq14");
                } else {
                    // a closed switch would drag the neighbor onto a feeder it
                    // cannot take, so assignment and closure are exclusive
                    block_a_terms.push_back({ix.z(t, ba, f), 1.0});
                }
            }
            for (int f : fb)
                if (std::find(fa.begin(), fa.end(), f) == fa.end())
                    block_b_terms.push_back({ix.z(t, bb, f), 1.0});
            // the incompatible assignments at one endpoint are mutually
            // exclusive, so one clique row per endpoint dominates the
            // pairwise exclusions
            if (!block_a_terms.empty()) {
                block_a_terms.push_back({g, 1.0});
                row(std::move(block_a_terms), Sense::Le, 1.0, "Eq12");
            }
            if (!block_b_terms.empty()) {
                block_b_terms.push_back({g, 1.0});
                row(std::move(block_b_terms), Sense::Le, 1.0, "Eq12");
            }
        }
        // a block is served only when its serving switch is closed
        for (int f = 0; f < Fn; ++f) {
            const auto& rg = regions[f];
            for (std::size_t k = 0; k < rg.blocks.size(); ++k) {
                if (rg.serving_switch[k] < 0) continue;
                row({{ix.z(t, rg.blocks[k], f), 1.0},
                     {ix.gamma(t, rg.serving_switch[k]), -1.0}},
                    Sense::Le, 0.0, "Eq13");
            }
        }
        for (int b : faulted) {
            std::vector<std::pair<VarId, double>> terms;
            for (int f : net.blocks[b].adjacent_feeders) terms.push_back({ix.z(t, b, f), 1.0});
            row(std::move(terms), Sense::Le, 0.0, "Eq15");
        }
    }

    // Service can only enter a de-energized island over one of its boundary
    // switches, so every restoration needs a prior (or same-step) close of
    // such a switch. Implied for integer points by the serving-path rows;
    // stated explicitly to tighten the relaxation.
    std::vector<int> island(B);
    for (int b = 0; b < B; ++b) island[b] = b;
    std::function<int(int)> find = [&](int b) {
        while (island[b] != b) b = island[b] = island[island[b]];
        return b;
    };
    for (int s = 0; s < S; ++s) {
        if (!state.topo.closed[s]) continue;
        int a = net.switches[s].block_a, c = net.switches[s].block_b;
        if (state.assign[a] < 0 && state.assign[c] < 0) island[find(a)] = find(c);
    }
    for (int b = 0; b < B; ++b) {
        if (!restorable[b]) continue;
        std::vector<VarId> doors;
        for (int s = 0; s < S; ++s) {
            if (state.topo.closed[s]) continue;
            bool a_in = find(net.switches[s].block_a) == find(b);
            bool c_in = find(net.switches[s].block_b) == find(b);
            if (a_in != c_in) doors.push_back(s);
        }
        for (int t = 0; t < L; ++t) {
            std::vector<std::pair<VarId, double>> cut;
            for (int h = 0; h <= t; ++h)
                for (VarId s = 0; s < static_cast<VarId>(doors.size()); ++s)
                    cut.push_back({ix.close_act(h, doors[s]), 1.0});
            for (int f : net.blocks[b].adjacent_feeders)
                cut.push_back({ix.dz(t, b, f), -1.0});
            row(std::move(cut), Sense::Ge, 0.0, "Eq13");
        }
    }
}

void WindowBuilder::radiality_rows() {
    for (int t = 0; t < L; ++t) {
        std::vector<std::pair<VarId, double>> count;
        for (int s = 0; s < S; ++s) count.push_back({ix.conn(t, s), 1.0});
        row(std::move(count), Sense::Eq, static_cast<double>(B - Fn), "Eq16");

        for (int b = 0; b < B; ++b) {
            std::vector<std::pair<VarId, double>> net_in;
            for (auto [nb, s] : net.blocks[b].boundary) {
                (void)nb;
                bool at_a = net.switches[s].block_a == b;
                // dir 0 carries a->b
                net_in.push_back({ix.fic_flow(t, s, 0), at_a ? -1.0 : 1.0});
                net_in.push_back({ix.fic_flow(t, s, 1), at_a ? 1.0 : -1.0});
            }
            if (net.blocks[b].source_of_feeder < 0)
                row(std::move(net_in), Sense::Eq, 1.0, "Eq17");
            else {
                for (auto& term : net_in) term.second = -term.second;  // net outflow
                row(std::move(net_in), Sense::Ge, 0.0, "Eq18");
            }
        }
        for (int s = 0; s < S; ++s) {
            row({{ix.fic_flow(t, s, 0), 1.0}, {ix.conn(t, s), -big_n}}, Sense::Le, 0.0, "Eq19");
            row({{ix.fic_flow(t, s, 1), 1.0}, {ix.conn(t, s), -big_n}}, Sense::Le, 0.0, "Eq19");
            row({{ix.gamma(t, s), 1.0}, {ix.conn(t, s), -1.0}}, Sense::Le, 0.0, "Eq20");
        }
    }
}

void WindowBuilder::protection_rows() {
    for (int t = 0; t < L; ++t) {
        for (int T = 0; T < static_cast<int>(net.transformers.size()); ++T) {
            std::vector<std::pair<VarId, double>> pterms, qterms;
            for (int f : net.transformers[T].feeders) {
                pterms.push_back({ix.feeder_p(t, f), 1.0});
                qterms.push_back({ix.feeder_q(t, f), 1.0});
            }
            row(std::move(pterms), Sense::Le, net.transformers[T].p_max_kw / pb, "Eq21");
            row(std::move(qterms), Sense::Le, net.transformers[T].q_max_kvar / pb, "Eq22");
        }
        for (int f = 0; f < Fn; ++f) {
            row({{ix.feeder_p(t, f), 1.0}}, Sense::Le, net.feeders[f].p_max_kw / pb, "Eq23");
            row({{ix.feeder_q(t, f), 1.0}}, Sense::Le, net.feeders[f].q_max_kvar / pb, "Eq23");
            const auto& rg = regions[f];
            std::vector<std::pair<VarId, double>> phead = {{ix.feeder_p(t, f), 1.0}};
            std::vector<std::pair<VarId, double>> qhead = {{ix.feeder_q(t, f), 1.0}};
            for (int l : rg.child_lines[0]) {
                phead.push_back({ix.line_p(t, l, f), -1.0});
                qhead.push_back({ix.line_q(t, l, f), -1.0});
            }
            row(std::move(phead), Sense::Eq, 0.0, "Eq24");
            row(std::move(qhead), Sense::Eq, 0.0, "Eq25");
        }
    }
}

void WindowBuilder::distflow_rows() {
    for (int t = 0; t < L; ++t) {
        for (int f = 0; f < Fn; ++f) {
            const auto& rg = regions[f];
            double pcap = net.transformers[net.feeders[f].transformer].p_max_kw / pb;
            double qcap = net.transformers[net.feeders[f].transformer].q_max_kvar / pb;
            for (std::size_t k = 0; k < rg.nodes.size(); ++k) {
                int j = rg.nodes[k];
                int b = net.nodes[j].block;
                VarId zb = ix.z(t, b, f);
                if (rg.parent_line[k] < 0) {
                    // source node: nominal voltage whenever the feeder serves
                    // its own source block
                    row({{ix.volt(t, j, f), 1.0}, {zb, -win.v0}}, Sense::Ge, 0.0, "Eq36");
                    row({{ix.volt(t, j, f), 1.0}, {zb, win.v_max - win.v0}}, Sense::Le,
                        win.v_max, "Eq35");
                    continue;
                }
                int l = rg.parent_line[k];
                int i = net.lines[l].from == j ? net.lines[l].to : net.lines[l].from;
                VarId P = ix.line_p(t, l, f), Q = ix.line_q(t, l, f);
                VarId dp = ix.slack_p(t, l, f), dq = ix.slack_q(t, l, f);
                VarId dv = ix.slack_v(t, j, f);

                std::vector<std::pair<VarId, double>> pbal = {{P, 1.0}, {dp, 1.0}};
                std::vector<std::pair<VarId, double>> qbal = {{Q, 1.0}, {dq, 1.0}};
                for (int cl : rg.child_lines[k]) {
                    pbal.push_back({ix.line_p(t, cl, f), -1.0});
                    qbal.push_back({ix.line_q(t, cl, f), -1.0});
                }
                row(std::move(pbal), Sense::Eq, fp(t, j), "Eq26");
                row(std::move(qbal), Sense::Eq, fq(t, j), "Eq27");

                row({{ix.volt(t, i, f), 1.0},
                     {ix.volt(t, j, f), -1.0},
                     {P, -net.lines[l].r_pu / win.v0},
                     {Q, -net.lines[l].x_pu / win.v0},
                     {dv, -1.0}},
                    Sense::Eq, 0.0, "Eq28");

                row({{dp, 1.0}, {zb, m_pu}}, Sense::Le, m_pu, "Eq29");
                row({{dq, 1.0}, {zb, m_pu}}, Sense::Le, m_pu, "Eq30");
                row({{dv, 1.0}, {zb, m_pu}}, Sense::Le, m_pu, "Eq31");
                row({{dp, 1.0}}, Sense::Ge, 0.0, "Eq32");
                row({{dq, 1.0}}, Sense::Ge, 0.0, "Eq32");
                row({{dv, 1.0}}, Sense::Ge, 0.0, "Eq32");

                if (net.lines[l].is_switch() || i == net.feeders[f].source_node) {
                    row({{P, 1.0}, {zb, -pcap}}, Sense::Le, 0.0, "Eq33");
                    row({{Q, 1.0}, {zb, -qcap}}, Sense::Le, 0.0, "Eq34");
                }
                row({{ix.volt(t, j, f), 1.0}, {zb, -win.v_max}}, Sense::Le, 0.0, "Eq35");
            }
        }
        // summed per-node voltage window over candidate feeders
        for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
            int b = net.nodes[i].block;
            std::vector<std::pair<VarId, double>> low, high;
            bool any = false;
            for (int f : net.blocks[b].adjacent_feeders) {
                VarId v = ix.volt(t, i, f);
                if (v < 0) continue;
                any = true;
                low.push_back({v, 1.0});
                low.push_back({ix.z(t, b, f), -win.v_min});
                high.push_back({v, 1.0});
                high.push_back({ix.z(t, b, f), -win.v_max});
            }
            if (!any) continue;
            row(std::move(low), Sense::Ge, 0.0, "Eq36");
            row(std::move(high), Sense::Le, 0.0, "Eq36");
        }
    }
}

void WindowBuilder::objective_and_safeguard() {
    for (int t = 0; t < L; ++t) {
        // a vanishing extra weight on earlier steps breaks ties between
        // plans of equal total toward acting sooner
        model.set_objective_term(ix.step_reward(t), 1.0 + win.earliness * (L - 1 - t));
        for (int s = 0; s < S; ++s) {
            model.set_objective_term(ix.open_act(t, s), -win.alpha);
            model.set_objective_term(ix.close_act(t, s), -win.alpha);
        }
    }
    if (win.safeguard) {
        const auto& sg = *win.safeguard;
        std::vector<std::pair<VarId, double>> terms;
        for (int t = 0; t < L; ++t) {
            terms.push_back({ix.step_reward(t), 1.0});
            for (int s = 0; s < S; ++s) {
                terms.push_back({ix.open_act(t, s), -win.alpha});
                terms.push_back({ix.close_act(t, s), -win.alpha});
            }
        }
        row(std::move(terms), Sense::Ge, (1.0 - sg.epsilon) * sg.bound - sg.fixed_reward,
            "safeguard");
    }
}


WindowModel build_window_model(const NetworkModel& net, const SystemState& state,
                               const LoadForecast& forecast, const WindowSpec& win,
                               const std::set<int>& faulted_blocks) {
    if (state.assign.size() != net.blocks.size() ||
        state.topo.closed.size() != net.switches.size())
        throw ModelError("state does not match the network");
    auto regions = build_regions(net);
    WindowBuilder bld(net, state, forecast, win, faulted_blocks, regions);
    bld.make_variables();
    bld.assignment_rows();
    bld.increment_rows();
    bld.switching_rows();
    bld.topology_rows();
    bld.radiality_rows();
    bld.protection_rows();
    bld.distflow_rows();
    bld.objective_and_safeguard();
    WindowModel wm;
    wm.model = std::move(bld.model);
    wm.index = std::move(bld.ix);
    return wm;
}

StepDecision decode_first_step(const milp::Solution& sol, const VarIndex& index,
                               const net::NetworkModel& net) {
    auto bin = [&](VarId v) {
        double x = sol.values.at(static_cast<std::size_t>(v));
        double r = std::round(x);
        if (std::abs(x - r) > 1e-4 || (r != 0.0 && r != 1.0))
            throw ModelError("non-integral binary in window solution");
        return r == 1.0;
    };
    StepDecision d;
    for (int s = 0; s < static_cast<int>(net.switches.size()); ++s) {
        if (bin(index.open_act(0, s))) {
            if (d.open_switch >= 0) throw ModelError("more than one open action in one step");
            d.open_switch = s;
        }
        if (bin(index.close_act(0, s))) {
            if (d.close_switch >= 0) throw ModelError("more than one close action in one step");
            d.close_switch = s;
        }
    }
    if (d.open_switch >= 0 && d.open_switch == d.close_switch)
        throw ModelError("switch opened and closed in the same step");
    for (int b = 0; b < static_cast<int>(net.blocks.size()); ++b)
        for (int f : net.blocks[b].adjacent_feeders) {
            VarId dz = index.dz(0, b, f);
            if (dz >= 0 && bin(dz)) d.restored_blocks.push_back({b, f});
        }
    return d;
}

PhysicsReport evaluate_ground_truth_feasibility(const NetworkModel& net,
                                                const net::Topology& topo,
                                                const std::vector<int>& assign,
                                                const std::vector<double>& p_kw,
                                                const std::vector<double>& q_kvar, double v0,
                                                double v_min, double v_max, double tol) {
    PhysicsReport rep;
    const double pb = net.power_base_kw();
    rep.transformer_p_kw.assign(net.transformers.size(), 0.0);
    rep.feeder_p_kw.assign(net.feeders.size(), 0.0);
    std::vector<double> feeder_q(net.feeders.size(), 0.0);

    for (int f = 0; f < static_cast<int>(net.feeders.size()); ++f) {
        // BFS over closed lines restricted to nodes whose block is assigned f
        // (plus the source node).
        std::vector<int> order;
        std::vector<int> parent_line(net.nodes.size(), -2);
        int src = net.feeders[f].source_node;
        auto in_scope = [&](int node) {
            return node == src || assign[net.nodes[node].block] == f;
        };
        if (assign[net.nodes[src].block] != f) continue;  // feeder fully down
        std::vector<std::vector<int>> incident(net.nodes.size());
        for (int l = 0; l < static_cast<int>(net.lines.size()); ++l) {
            const auto& ln = net.lines[l];
            if (ln.is_switch() && !topo.closed[ln.switch_index]) continue;
            if (!in_scope(ln.from) || !in_scope(ln.to)) continue;
            incident[ln.from].push_back(l);
            incident[ln.to].push_back(l);
        }
        parent_line[src] = -1;
        order.push_back(src);
        for (std::size_t k = 0; k < order.size(); ++k) {
            int i = order[k];
            for (int l : incident[i]) {
                int j = net.lines[l].from == i ? net.lines[l].to : net.lines[l].from;
                if (parent_line[j] != -2) continue;
                parent_line[j] = l;
                order.push_back(j);
            }
        }

        // subtree load accumulation, leaf to root
        std::vector<double> psub(net.nodes.size(), 0.0), qsub(net.nodes.size(), 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int j = *it;
            psub[j] += p_kw[j] / pb;
            qsub[j] += q_kvar[j] / pb;
            if (parent_line[j] >= 0) {
                int l = parent_line[j];
                int i = net.lines[l].from == j ? net.lines[l].to : net.lines[l].from;
                psub[i] += psub[j];
                qsub[i] += qsub[j];
            }
        }
        // voltage drop, root to leaf
        std::vector<double> volt(net.nodes.size(), 0.0);
        volt[src] = v0;
        for (int j : order) {
            if (parent_line[j] < 0) continue;
            int l = parent_line[j];
            int i = net.lines[l].from == j ? net.lines[l].to : net.lines[l].from;
            volt[j] = volt[i] - (net.lines[l].r_pu * psub[j] + net.lines[l].x_pu * qsub[j]) / v0;
            if (volt[j] < v_min - tol)
                rep.violations.push_back({"voltage_low", net.nodes[j].id, v_min - volt[j]});
            if (volt[j] > v_max + tol)
                rep.violations.push_back({"voltage_high", net.nodes[j].id, volt[j] - v_max});
        }

        rep.feeder_p_kw[f] = psub[src] * pb;
        feeder_q[f] = qsub[src] * pb;
        rep.transformer_p_kw[net.feeders[f].transformer] += psub[src] * pb;
        if (psub[src] > net.feeders[f].p_max_kw / pb + tol)
            rep.violations.push_back(
                {"feeder_p", net.feeders[f].id, psub[src] - net.feeders[f].p_max_kw / pb});
        if (qsub[src] > net.feeders[f].q_max_kvar / pb + tol)
            rep.violations.push_back(
                {"feeder_q", net.feeders[f].id, qsub[src] - net.feeders[f].q_max_kvar / pb});
        rep.max_feeder_util =
            std::max(rep.max_feeder_util, rep.feeder_p_kw[f] / net.feeders[f].p_max_kw);
    }
    std::vector<double> xq(net.transformers.size(), 0.0);
    for (int f = 0; f < static_cast<int>(net.feeders.size()); ++f)
        xq[net.feeders[f].transformer] += feeder_q[f];
    for (int T = 0; T < static_cast<int>(net.transformers.size()); ++T) {
        if (rep.transformer_p_kw[T] > net.transformers[T].p_max_kw + tol * pb)
            rep.violations.push_back(
                {"transformer_p", net.transformers[T].id,
                 (rep.transformer_p_kw[T] - net.transformers[T].p_max_kw) / pb});
        if (xq[T] > net.transformers[T].q_max_kvar + tol * pb)
            rep.violations.push_back({"transformer_q", net.transformers[T].id,
                                      (xq[T] - net.transformers[T].q_max_kvar) / pb});
        rep.max_transformer_util = std::max(rep.max_transformer_util,
                                            rep.transformer_p_kw[T] / net.transformers[T].p_max_kw);
    }
    return rep;
}

}  // namespace restore::formulation
