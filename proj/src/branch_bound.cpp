#include <chrono>
#include <cmath>
#include <queue>

#include "restore/milp.hpp"
#include "restore/presolve.hpp"
#include "restore/simplex.hpp"

namespace restore::milp {

namespace {

struct Node {
    std::vector<std::pair<VarId, int>> fixings;  // binary var -> 0/1
    double bound;
    std::int64_t seq;
};
struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound < b.bound;  // max-heap on bound
        return a.seq > b.seq;                              // FIFO tie break
    }
};

Solution branch_and_bound_core(const Model& model, const SolveOptions& opts) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    auto out_of_time = [&] {
        return std::chrono::duration<double>(clock::now() - t0).count() > opts.time_limit_s;
    };

    Solution best;
    best.status = SolveStatus::Infeasible;
    double incumbent = -std::numeric_limits<double>::infinity();

    Simplex sx(model);
    sx.deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           std::chrono::duration<double>(opts.time_limit_s));
    const double gap = opts.abs_gap;
    auto root = sx.solve();
    if (root.status == LpStatus::Unbounded) {
        best.status = SolveStatus::Unbounded;
        return best;
    }
    if (root.status == LpStatus::Infeasible) return best;
    if (root.status != LpStatus::Optimal) {
        best.status = SolveStatus::LimitReached;
        return best;
    }

    const auto& vars = model.vars();
    std::vector<VarId> bins;
    for (const auto& v : vars)
        if (v.kind == VarKind::Binary) bins.push_back(v.id);
    std::vector<std::pair<double, double>> orig_bounds(bins.size());
    for (std::size_t k = 0; k < bins.size(); ++k)
        orig_bounds[k] = {vars[bins[k]].lower, vars[bins[k]].upper};

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::int64_t seq = 0, nodes = 0;
    open.push({{}, root.objective, seq++});
    double global_bound = root.objective;

    std::vector<double> xr;
    bool limit_hit = false;

    while (!open.empty()) {
        Node node = std::move(const_cast<Node&>(open.top()));
        open.pop();
        if (node.bound <= incumbent + gap) continue;
        global_bound = node.bound;
        if (nodes >= opts.node_limit || out_of_time()) {
            limit_hit = true;
            break;
        }
        ++nodes;

        // Apply this node's bound set and warm-start from the current basis.
        for (std::size_t k = 0; k < bins.size(); ++k)
            sx.set_bound(bins[k], orig_bounds[k].first, orig_bounds[k].second);
        for (auto [v, val] : node.fixings) sx.set_bound(v, val, val);
        auto res = sx.reoptimize();
        if (res.status == LpStatus::IterLimit) {
            limit_hit = true;
            break;
        }
        if (res.status == LpStatus::Infeasible) continue;
        if (res.status == LpStatus::Unbounded) {
            best.status = SolveStatus::Unbounded;
            return best;
        }
        if (res.objective <= incumbent + gap) continue;

        // highest branch priority first, most fractional within a priority
        auto pick_branch = [&](const std::vector<double>& x) {
            VarId branch = -1;
            int best_prio = 0;
            double worst_frac = opts.integer_tol;
            for (VarId b : bins) {
                double f = std::abs(x[b] - std::round(x[b]));
                if (f <= opts.integer_tol) continue;
                int prio = vars[b].branch_priority;
                if (branch < 0 || prio > best_prio ||
                    (prio == best_prio && f > worst_frac + 1e-15)) {
                    best_prio = prio;
                    worst_frac = f;
                    branch = b;
                }
            }
            return branch;
        };
        auto accept_incumbent = [&](double obj, const std::vector<double>& x) {
            if (!std::isfinite(obj) || obj <= incumbent) return;
            incumbent = obj;
            best.values = x;
            for (VarId b : bins) best.values[b] = std::round(best.values[b]);
            best.objective_value = obj;
            best.status = SolveStatus::Optimal;
        };

        sx.extract(xr);
        VarId branch = pick_branch(xr);
        if (branch < 0) {
            accept_incumbent(res.objective, xr);
            continue;
        }
        for (int val = 0; val <= 1; ++val) {
            Node child;
            child.fixings = node.fixings;
            child.fixings.push_back({branch, val});
            child.bound = res.objective;
            child.seq = seq++;
            open.push(std::move(child));
        }

        // Dive: fix fractional binaries to their rounded LP values until the
        // point is integral or the plunge dead-ends. Runs at every node until
        // an incumbent exists, then periodically to refresh it.
        bool want_dive = best.status != SolveStatus::Optimal || nodes % 64 == 0;
        if (want_dive) {
            VarId bvar = branch;
            std::size_t dive_len = 0;
            while (bvar >= 0 && dive_len++ < bins.size() && !out_of_time()) {
                int val = xr[bvar] >= 0.5 ? 1 : 0;
                sx.set_bound(bvar, val, val);
                auto dres = sx.reoptimize();
                ++nodes;
                bool dead = dres.status != LpStatus::Optimal ||
                            dres.objective <= incumbent + gap;
                if (dead) {
                    // retry the opposite value before abandoning the plunge
                    sx.set_bound(bvar, 1 - val, 1 - val);
                    dres = sx.reoptimize();
                    ++nodes;
                    dead = dres.status != LpStatus::Optimal ||
                           dres.objective <= incumbent + gap;
                }
                if (dead) break;
                sx.extract(xr);
                bvar = pick_branch(xr);
                if (bvar < 0) {
                    accept_incumbent(dres.objective, xr);
                    break;
                }
            }
        }
    }

    best.nodes_explored = nodes;
    if (limit_hit) {
        best.status = SolveStatus::LimitReached;  // incumbent (if any) in values
        best.bound = global_bound;
    } else if (best.status == SolveStatus::Optimal) {
        best.bound = best.objective_value;
    }
    return best;
}

}  // namespace

Solution solve_with_presolve(const Model& model, const SolveOptions& opts) {
    Presolve ps(model);
    if (!ps.run()) {
        Solution s;
        s.status = SolveStatus::Infeasible;
        return s;
    }
    Model reduced = ps.build_reduced();
    Solution s = branch_and_bound_core(reduced, opts);
    if (!s.values.empty() || s.status == SolveStatus::Optimal) {
        s.values = ps.postsolve(s.values.empty() ? std::vector<double>(reduced.num_vars(), 0.0)
                                                 : s.values);
        s.objective_value += ps.objective_offset();
        s.bound += ps.objective_offset();
    }
    if (s.status == SolveStatus::Optimal) {
        auto viols = verify_solution(model, s.values, std::max(opts.feas_tol, 1e-6));
        if (!viols.empty()) {
            // presolve produced an inconsistent reduction; solve the original
            return branch_and_bound_core(model, opts);
        }
    }
    return s;
}

Solution BranchAndBoundSolver::solve(const Model& model, const SolveOptions& opts) {
    if (opts.presolve) return solve_with_presolve(model, opts);
    return branch_and_bound_core(model, opts);
}

}  // namespace restore::milp
