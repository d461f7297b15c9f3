#include "restore/rolling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "restore/common.hpp"

namespace restore::rolling {

using formulation::LoadForecast;
using formulation::WindowSpec;
using net::NetworkModel;
using scenario::ScenarioEngine;

HorizonPlan partition_horizon(int total_steps, int mu) {
    if (total_steps < 0) throw ModelError("total_steps must be non-negative");
    if (mu < 1) throw ModelError("mu must be at least 1");
    HorizonPlan plan;
    plan.total_steps = total_steps;
    plan.mu = mu;
    plan.beta = (total_steps + 1) % mu;
    plan.num_full_segments = (total_steps + 1) / mu;
    if (plan.beta > 0) plan.segments.push_back({0, plan.beta - 1});
    for (int l = 0; l < plan.num_full_segments; ++l)
        plan.segments.push_back({plan.beta + l * mu, plan.beta + (l + 1) * mu - 1});
    return plan;
}

double compute_epsilon(double alpha, int mu, double delta_d, double cap) {
    if (alpha == 0.0) return 0.0;
    if (delta_d <= 0.0) throw ModelError("delta_d must be positive");
    return std::min(2.0 * alpha * mu / delta_d, cap);
}

std::vector<int> restorable_blocks(const NetworkModel& net,
                                  const scenario::IsolationResult& iso) {
    // A block can come back only if some adjacent feeder's serving path
    // reaches it without crossing the faulted area.
    auto regions = formulation::build_regions(net);
    std::vector<int> out;
    for (int b : iso.islanded_blocks) {
        bool ok = false;
        for (int f : net.blocks[b].adjacent_feeders) {
            const auto& rg = regions[f];
            int src_block = net.nodes[net.feeders[f].source_node].block;
            if (iso.faulted_blocks.count(src_block)) continue;
            bool clear = true;
            for (int pos = rg.block_pos[b]; pos >= 0; pos = rg.parent_block[pos] >= 0
                                                                ? rg.block_pos[rg.parent_block[pos]]
                                                                : -1) {
                if (iso.faulted_blocks.count(rg.blocks[pos])) {
                    clear = false;
                    break;
                }
            }
            if (clear && rg.block_pos[b] >= 0) {
                ok = true;
                break;
            }
        }
        if (ok) out.push_back(b);
    }
    return out;
}

double default_delta_d(const NetworkModel& net, const ScenarioEngine& eng) {
    double s = eng.scenario().config.clpu_factor;
    double best = 0.0;
    for (int b : restorable_blocks(net, eng.isolation())) {
        double d = s * net.blocks[b].peak_active_kw;
        if (d > 0.0 && (best == 0.0 || d < best)) best = d;
    }
    return best;
}

namespace {

/// A flow bound that dominates any step's total forecast demand.
double forecast_big_m(const LoadForecast& fc) {
    double worst = 1.0;
    for (const auto& step_p : fc.p_kw) {
        double total = 0.0;
        for (double v : step_p) total += v;
        worst = std::max(worst, total);
    }
    return 1.2 * worst;
}

/// Solve one window; a limit stop with an incumbent is accepted.
milp::Solution solve_window(const milp::Model& model, const milp::SolveOptions& opts) {
    milp::Solution sol = milp::solve(model, opts);
    if (sol.status == milp::SolveStatus::Optimal) return sol;
    if (sol.status == milp::SolveStatus::LimitReached && !sol.values.empty()) return sol;
    return sol;  // Infeasible (caller decides) or limit without incumbent
}

/// Planned reward of window step t: newly served demand minus action costs,
/// in the window's own forecast units (earliness weights excluded).
double planned_step_reward(const milp::Solution& sol, const formulation::VarIndex& ix,
                           const NetworkModel& net, double alpha, int t) {
    double r = sol.values[ix.step_reward(t)];
    for (std::size_t s = 0; s < net.switches.size(); ++s) {
        if (sol.values[ix.open_act(t, static_cast<int>(s))] > 0.5) r -= alpha;
        if (sol.values[ix.close_act(t, static_cast<int>(s))] > 0.5) r -= alpha;
    }
    return r;
}

StepDecision decode_step(const milp::Solution& sol, const formulation::VarIndex& ix,
                         const NetworkModel& net, int t) {
    StepDecision dec;
    for (std::size_t s = 0; s < net.switches.size(); ++s) {
        int si = static_cast<int>(s);
        if (sol.values[ix.open_act(t, si)] > 0.5) dec.open_switch = si;
        if (sol.values[ix.close_act(t, si)] > 0.5) dec.close_switch = si;
    }
    return dec;
}

struct Runner {
    const NetworkModel& net;
    ScenarioEngine& eng;
    const RollingConfig& cfg;
    RestorationLog& log;
    SystemState state;
    int zero_windows = 0;
    bool done = false;

    WindowSpec base_spec(int start, int length, const LoadForecast& fc) const {
        WindowSpec spec;
        spec.start_step = start;
        spec.length = length;
        spec.alpha = cfg.alpha;
        spec.big_m = forecast_big_m(fc);
        spec.v0 = cfg.v0;
        spec.v_min = cfg.v_min;
        spec.v_max = cfg.v_max;
        spec.earliness = cfg.earliness;
        return spec;
    }

    /// Execute `dec` from the current state, appending a fully measured
    /// step record. Returns the realized reward-relevant restored demand.
    void execute(const StepDecision& dec, double planned, double window_obj, int window_len) {
        SystemState before = state;
        state = eng.apply_decision_and_measure(before, dec);

        StepRecord rec;
        rec.step = before.step;
        rec.decision = dec;
        if (dec.open_switch >= 0) rec.open_id = net.switches[dec.open_switch].id;
        if (dec.close_switch >= 0) rec.close_id = net.switches[dec.close_switch].id;
        rec.planned_reward = planned;
        rec.window_objective = window_obj;
        rec.window_length = window_len;
        rec.topo_after = state.topo;
        for (std::size_t b = 0; b < net.blocks.size(); ++b)
            if (before.assign[b] < 0 && state.assign[b] >= 0) {
                rec.restored_blocks.push_back(static_cast<int>(b));
                for (int i : net.blocks[b].node_ids) rec.restored_kw += state.measured_kw[i];
            }
        for (std::size_t b = 0; b < net.blocks.size(); ++b)
            if (eng.der_online(static_cast<int>(b), state.step) &&
                !eng.der_online(static_cast<int>(b), state.step - 1))
                rec.der_events.push_back(static_cast<int>(b));

        std::vector<double> p, q;
        eng.realize_loads(state.assign, state.step, p, q);
        auto rep = formulation::evaluate_ground_truth_feasibility(net, state.topo, state.assign,
                                                                  p, q, cfg.v0, cfg.v_min,
                                                                  cfg.v_max, 1e-6);
        rec.violations = static_cast<int>(rep.violations.size());
        rec.max_transformer_util = rep.max_transformer_util;
        rec.max_feeder_util = rep.max_feeder_util;
        for (std::size_t k = 0; k < net.transformers.size(); ++k)
            rec.transformer_util.push_back(
                net.transformers[k].p_max_kw > 0.0
                    ? rep.transformer_p_kw[k] / net.transformers[k].p_max_kw
                    : 0.0);
        for (std::size_t f = 0; f < net.feeders.size(); ++f)
            rec.feeder_util.push_back(
                net.feeders[f].p_max_kw > 0.0 ? rep.feeder_p_kw[f] / net.feeders[f].p_max_kw
                                              : 0.0);

        log.total_restored_kw += rec.restored_kw;
        log.violation_count += rec.violations;
        log.max_transformer_util = std::max(log.max_transformer_util, rec.max_transformer_util);
        log.max_feeder_util = std::max(log.max_feeder_util, rec.max_feeder_util);
        if (!dec.empty() || !rec.restored_blocks.empty())
            log.steps_used = rec.step + 1;
        log.steps.push_back(std::move(rec));
    }

    void note_window(double objective, const StepDecision& dec) {
        if (objective <= 1e-6 && dec.empty())
            ++zero_windows;
        else
            zero_windows = 0;
        if (zero_windows >= 2) done = true;  // nothing further attainable
    }

    void finalize() {
        for (int b : restorable_blocks(net, eng.isolation()))
            if (state.assign[b] < 0) log.converged = false;
    }
};

}  // namespace

double compute_segment_bound(const NetworkModel& net, const SystemState& state,
                             const LoadForecast& forecast, int seg_first, int seg_last,
                             const std::set<int>& faulted, const RollingConfig& cfg) {
    WindowSpec spec;
    spec.start_step = seg_first;
    spec.length = seg_last - seg_first + 1;
    spec.alpha = cfg.alpha;
    spec.v0 = cfg.v0;
    spec.v_min = cfg.v_min;
    spec.v_max = cfg.v_max;
    spec.big_m = forecast_big_m(forecast);
    auto wm = formulation::build_window_model(net, state, forecast, spec, faulted);
    auto sol = solve_window(wm.model, cfg.solver);
    if (sol.status == milp::SolveStatus::Infeasible)
        throw ModelError("segment bound model is infeasible");
    if (sol.values.empty()) throw ModelError("segment bound hit the solver limit");
    return sol.objective_value;
}

static RestorationLog run_rolling(const NetworkModel& net, ScenarioEngine& eng,
                                  const RollingConfig& cfg, bool safeguarded) {
    RestorationLog log;
    log.strategy = safeguarded ? "safeguarded" : "traditional";
    log.seed = eng.scenario().config.seed;

    Runner run{net, eng, cfg, log, eng.initial_state()};
    const auto& faulted = eng.faulted_blocks();

    double eps0 = 0.0;
    if (safeguarded && cfg.mu > 1) {
        if (cfg.epsilon >= 0.0) {
            eps0 = cfg.epsilon;
        } else {
            double dd = cfg.delta_d >= 0.0 ? cfg.delta_d : default_delta_d(net, eng);
            eps0 = dd > 0.0 ? compute_epsilon(cfg.alpha, cfg.mu, dd, cfg.epsilon_cap) : 0.0;
        }
    }
    log.epsilon = eps0;

    auto plan = partition_horizon(cfg.total_steps, cfg.mu);
    // the safeguard machinery engages only when a segment spans several steps
    bool use_guard = safeguarded && cfg.mu > 1;

    for (auto [seg_first, seg_last] : plan.segments) {
        if (run.done) break;
        double bound = 0.0;
        double eps = eps0;
        double accrued = 0.0;
        if (use_guard) {
            auto fc = eng.make_forecast(run.state, seg_first, seg_last - seg_first + 1);
            bound = compute_segment_bound(net, run.state, fc, seg_first, seg_last, faulted, cfg);
        }
        for (int t = seg_first; t <= seg_last && !run.done; ++t) {
            int len = safeguarded ? seg_last - t + 1
                                  : std::min(cfg.mu, cfg.total_steps - t + 1);
            auto fc = eng.make_forecast(run.state, t, len);
            WindowSpec spec = run.base_spec(t, len, fc);
            if (use_guard && bound > 1e-9)
                spec.safeguard = formulation::SafeguardSpec{bound, eps, accrued};

            milp::Solution sol;
            for (;;) {
                auto wm = formulation::build_window_model(net, run.state, fc, spec, faulted);
                sol = solve_window(wm.model, cfg.solver);
                if (sol.status == milp::SolveStatus::Infeasible && spec.safeguard) {
                    // the realized state fell behind the bound's assumption;
                    // loosen the floor and note the event
                    double eps_new = std::min(1.0, 2.0 * eps + 0.05);
                    log.relaxations.push_back({t, eps, eps_new});
                    if (eps >= 1.0) {
                        spec.safeguard.reset();
                    } else {
                        eps = eps_new;
                        spec.safeguard->epsilon = eps;
                    }
                    continue;
                }
                if (sol.values.empty())
                    throw ModelError("window solve failed at step " + std::to_string(t));
                auto dec = formulation::decode_first_step(sol, wm.index, net);
                double planned = planned_step_reward(sol, wm.index, net, cfg.alpha, 0);
                run.note_window(sol.objective_value, dec);
                run.execute(dec, planned, sol.objective_value, len);
                accrued += planned;
                break;
            }
        }
        if (use_guard) log.segments.push_back({seg_first, seg_last, bound, eps, accrued});
    }
    run.finalize();
    return log;
}

RestorationLog run_safeguarded(const NetworkModel& net, ScenarioEngine& eng,
                               const RollingConfig& cfg) {
    return run_rolling(net, eng, cfg, true);
}

RestorationLog run_traditional(const NetworkModel& net, ScenarioEngine& eng,
                               const RollingConfig& cfg) {
    return run_rolling(net, eng, cfg, false);
}

RestorationLog run_one_shot(const NetworkModel& net, ScenarioEngine& eng,
                            const RollingConfig& cfg) {
    RestorationLog log;
    log.strategy = "one_shot";
    log.seed = eng.scenario().config.seed;

    Runner run{net, eng, cfg, log, eng.initial_state()};
    const auto& faulted = eng.faulted_blocks();
    int len = std::min(cfg.total_steps + 1, cfg.one_shot_horizon_cap);
    if (len < 1) len = 1;

    auto fc = eng.make_forecast(run.state, 0, len);
    WindowSpec spec = run.base_spec(0, len, fc);
    auto wm = formulation::build_window_model(net, run.state, fc, spec, faulted);
    auto sol = solve_window(wm.model, cfg.solver);
    if (sol.status == milp::SolveStatus::Infeasible)
        throw ModelError("one-shot plan model is infeasible");
    if (sol.values.empty()) throw ModelError("one-shot plan hit the solver limit");

    // execute the whole plan open-loop; reality is only measured, never fed back
    int last_action = -1;
    for (int t = 0; t < len; ++t)
        if (!decode_step(sol, wm.index, net, t).empty()) last_action = t;
    for (int t = 0; t <= last_action; ++t) {
        StepDecision dec = decode_step(sol, wm.index, net, t);
        double planned = planned_step_reward(sol, wm.index, net, cfg.alpha, t);
        run.execute(dec, planned, sol.objective_value, len);
    }
    run.finalize();
    return log;
}

std::string log_to_json(const NetworkModel& net, const RestorationLog& log) {
    using json = nlohmann::json;
    json doc;
    doc["strategy"] = log.strategy;
    doc["seed"] = log.seed;
    doc["epsilon"] = log.epsilon;
    doc["total_restored_kw"] = log.total_restored_kw;
    doc["steps_used"] = log.steps_used;
    doc["converged"] = log.converged;
    doc["violation_count"] = log.violation_count;
    doc["max_transformer_util"] = log.max_transformer_util;
    doc["max_feeder_util"] = log.max_feeder_util;

    doc["steps"] = json::array();
    for (const auto& s : log.steps) {
        json js;
        js["step"] = s.step;
        js["open"] = s.open_id;
        js["close"] = s.close_id;
        json rb = json::array();
        for (int b : s.restored_blocks) rb.push_back(net.blocks[b].id);
        js["restored_blocks"] = std::move(rb);
        js["restored_kw"] = s.restored_kw;
        js["planned_reward"] = s.planned_reward;
        js["window_objective"] = s.window_objective;
        js["window_length"] = s.window_length;
        js["violations"] = s.violations;
        js["max_transformer_util"] = s.max_transformer_util;
        js["max_feeder_util"] = s.max_feeder_util;
        json open_sw = json::array();
        for (std::size_t k = 0; k < s.topo_after.closed.size(); ++k)
            if (!s.topo_after.closed[k]) open_sw.push_back(net.switches[k].id);
        js["open_switches_after"] = std::move(open_sw);
        json der = json::array();
        for (int b : s.der_events) der.push_back(net.blocks[b].id);
        js["der_reconnections"] = std::move(der);
        doc["steps"].push_back(std::move(js));
    }
    doc["segments"] = json::array();
    for (const auto& g : log.segments)
        doc["segments"].push_back({{"first", g.first},
                                   {"last", g.last},
                                   {"bound", g.bound},
                                   {"epsilon", g.epsilon},
                                   {"accrued", g.accrued}});
    doc["relaxations"] = json::array();
    for (const auto& r : log.relaxations)
        doc["relaxations"].push_back({{"step", r.step},
                                      {"epsilon_before", r.epsilon_before},
                                      {"epsilon_after", r.epsilon_after}});
    return doc.dump(2) + "\n";
}

}  // namespace restore::rolling
