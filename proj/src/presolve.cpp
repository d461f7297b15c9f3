#include "restore/presolve.hpp"

#include <algorithm>
#include <cmath>

namespace restore::milp {

namespace {
constexpr double kTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

double activity_bound(const std::vector<std::pair<VarId, double>>& terms,
                      const std::vector<double>& lb, const std::vector<double>& ub, bool want_max,
                      VarId skip = -1) {
    double s = 0.0;
    for (const auto& [v, a] : terms) {
        if (v == skip) continue;
        double b = (a > 0) == want_max ? ub[v] : lb[v];
        if (!std::isfinite(b)) return want_max ? kInf : -kInf;
        s += a * b;
    }
    return s;
}
}  // namespace

Presolve::Presolve(const Model& original) : orig_(original) {
    const auto& vars = original.vars();
    int n = static_cast<int>(vars.size());
    lb_.resize(n);
    ub_.resize(n);
    kind_.resize(n);
    obj_ = original.objective();
    removed_.assign(n, false);
    occurs_.assign(n, 0);
    for (int j = 0; j < n; ++j) {
        lb_[j] = vars[j].lower;
        ub_[j] = vars[j].upper;
        kind_[j] = vars[j].kind;
    }
    rows_.reserve(original.num_constraints());
    for (const auto& c : original.constraints()) {
        Row r{c.terms, c.sense, c.rhs, c.tag, false};
        // drop explicit zero coefficients
        std::erase_if(r.terms, [](const auto& t) { return t.second == 0.0; });
        for (const auto& [v, a] : r.terms) { (void)a; ++occurs_[v]; }
        rows_.push_back(std::move(r));
    }
}

void Presolve::drop_row(int i) {
    for (const auto& [v, a] : rows_[i].terms) { (void)a; --occurs_[v]; }
    rows_[i].deleted = true;
    rows_[i].terms.clear();
}

void Presolve::fix_var(VarId v, double val) {
    if (removed_[v]) return;
    if (val < lb_[v] - 1e-7 || val > ub_[v] + 1e-7) { infeasible_ = true; return; }
    removed_[v] = true;
    lb_[v] = ub_[v] = val;
    actions_.push_back({PostAction::Fix, v, val, -1});
    obj_offset_ += obj_[v] * val;
    obj_[v] = 0.0;
    if (val != 0.0) {
        for (auto& r : rows_) {
            if (r.deleted) continue;
            for (auto it = r.terms.begin(); it != r.terms.end(); ++it) {
                if (it->first == v) {
                    r.rhs -= it->second * val;
                    r.terms.erase(it);
                    --occurs_[v];
                    break;
                }
            }
        }
    } else {
        for (auto& r : rows_) {
            if (r.deleted) continue;
            std::erase_if(r.terms, [&](const auto& t) { return t.first == v; });
        }
        occurs_[v] = 0;
    }
}

bool Presolve::tighten(VarId v, double lo, double hi) {
    bool changed = false;
    if (is_int(v)) {
        if (std::isfinite(lo)) lo = std::ceil(lo - 1e-6);
        if (std::isfinite(hi)) hi = std::floor(hi + 1e-6);
    }
    if (lo > lb_[v] + 1e-7) { lb_[v] = lo; changed = true; }
    if (hi < ub_[v] - 1e-7) { ub_[v] = hi; changed = true; }
    if (lb_[v] > ub_[v] + 1e-7) { infeasible_ = true; return true; }
    if (changed && ub_[v] - lb_[v] < 1e-9) fix_var(v, 0.5 * (lb_[v] + ub_[v]));
    return changed;
}

void Presolve::substitute(int row_index, VarId v) {
    Row& r = rows_[row_index];
    double av = 0.0;
    std::vector<std::pair<VarId, double>> others;
    for (const auto& [w, a] : r.terms) {
        if (w == v) av = a;
        else others.push_back({w, a});
    }
    SubstRecord rec{v, av, r.rhs, others};
    int idx = static_cast<int>(substs_.size());
    substs_.push_back(std::move(rec));
    actions_.push_back({PostAction::Subst, v, 0.0, idx});
    removed_[v] = true;

    // x_v = (rhs - sum others)/av ; replace in objective
    if (obj_[v] != 0.0) {
        double f = obj_[v] / av;
        obj_offset_ += f * r.rhs;
        for (const auto& [w, a] : substs_[idx].others) obj_[w] -= f * a;
        obj_[v] = 0.0;
    }
    // replace in all other rows
    for (int i = 0; i < static_cast<int>(rows_.size()); ++i) {
        if (i == row_index || rows_[i].deleted) continue;
        Row& t = rows_[i];
        double coef = 0.0;
        for (const auto& [w, a] : t.terms)
            if (w == v) { coef = a; break; }
        if (coef == 0.0) continue;
        double f = coef / av;
        std::erase_if(t.terms, [&](const auto& p) { return p.first == v; });
        --occurs_[v];
        t.rhs -= f * r.rhs;
        for (const auto& [w, a] : substs_[idx].others) {
            bool found = false;
            for (auto& [tw, ta] : t.terms) {
                if (tw == w) {
                    ta -= f * a;
                    found = true;
                    break;
                }
            }
            if (!found && std::abs(f * a) > 0.0) {
                t.terms.push_back({w, -f * a});
                ++occurs_[w];
            }
        }
        std::erase_if(t.terms, [&](auto& p) {
            if (std::abs(p.second) < 1e-12) { --occurs_[p.first]; return true; }
            return false;
        });
    }
    drop_row(row_index);
}

bool Presolve::pass() {
    bool changed = false;
    for (int i = 0; i < static_cast<int>(rows_.size()) && !infeasible_; ++i) {
        Row& r = rows_[i];
        if (r.deleted) continue;
        if (r.terms.empty()) {
            bool ok = (r.sense == Sense::Le && r.rhs >= -1e-7) ||
                      (r.sense == Sense::Ge && r.rhs <= 1e-7) ||
                      (r.sense == Sense::Eq && std::abs(r.rhs) <= 1e-7);
            if (!ok) infeasible_ = true;
            drop_row(i);
            changed = true;
            continue;
        }
        if (r.terms.size() == 1) {
            auto [v, a] = r.terms[0];
            double b = r.rhs / a;
            if (r.sense == Sense::Eq) fix_var(v, b);
            else if ((r.sense == Sense::Le) == (a > 0)) tighten(v, -kInf, b);
            else tighten(v, b, kInf);
            drop_row(i);
            changed = true;
            continue;
        }
        double minact = activity_bound(r.terms, lb_, ub_, false);
        double maxact = activity_bound(r.terms, lb_, ub_, true);
        // infeasibility / redundancy
        if (r.sense != Sense::Ge && minact > r.rhs + 1e-7) { infeasible_ = true; break; }
        if (r.sense != Sense::Le && maxact < r.rhs - 1e-7) { infeasible_ = true; break; }
        if (r.sense == Sense::Le && maxact <= r.rhs + kTol) { drop_row(i); changed = true; continue; }
        if (r.sense == Sense::Ge && minact >= r.rhs - kTol) { drop_row(i); changed = true; continue; }
        if (r.sense == Sense::Eq && maxact <= r.rhs + kTol && minact >= r.rhs - kTol) {
            drop_row(i);
            changed = true;
            continue;
        }
        // forcing rows
        if (r.sense != Sense::Ge && std::isfinite(minact) && minact >= r.rhs - kTol) {
            auto terms = r.terms;
            for (auto [v, a] : terms) fix_var(v, a > 0 ? lb_[v] : ub_[v]);
            drop_row(i);
            changed = true;
            continue;
        }
        if (r.sense != Sense::Le && std::isfinite(maxact) && maxact <= r.rhs + kTol) {
            auto terms = r.terms;
            for (auto [v, a] : terms) fix_var(v, a > 0 ? ub_[v] : lb_[v]);
            drop_row(i);
            changed = true;
            continue;
        }
        // bound tightening (iterate over a copy: tighten may fix vars and
        // edit this row's term list)
        auto terms_copy = r.terms;
        for (auto [v, a] : terms_copy) {
            if (removed_[v]) continue;
            if (r.sense != Sense::Ge) {  // sum <= rhs
                double rest = activity_bound(r.terms, lb_, ub_, false, v);
                if (std::isfinite(rest)) {
                    double lim = (r.rhs - rest) / a;
                    bool t = a > 0 ? tighten(v, -kInf, lim) : tighten(v, lim, kInf);
                    changed |= t;
                }
            }
            if (r.sense != Sense::Le && !removed_[v]) {  // sum >= rhs
                double rest = activity_bound(r.terms, lb_, ub_, true, v);
                if (std::isfinite(rest)) {
                    double lim = (r.rhs - rest) / a;
                    bool t = a > 0 ? tighten(v, lim, kInf) : tighten(v, -kInf, lim);
                    changed |= t;
                }
            }
            if (infeasible_) break;
        }
        if (infeasible_) break;
        std::erase_if(r.terms, [&](const auto& t) { return removed_[t.first] && lb_[t.first] == 0.0; });
    }
    if (infeasible_) return changed;

    // substitution of implied-free continuous variables out of equality rows
    for (int i = 0; i < static_cast<int>(rows_.size()) && !infeasible_; ++i) {
        Row& r = rows_[i];
        if (r.deleted || r.sense != Sense::Eq) continue;
        if (r.terms.size() < 2 || r.terms.size() > 24) continue;
        VarId pick = -1;
        double pick_abs = 0.0;
        for (const auto& [v, a] : r.terms) {
            if (removed_[v] || is_int(v)) continue;
            if (occurs_[v] > 8) continue;
            if (std::abs(a) < 1e-7) continue;
            // implied-free: bounds from the row (given others) within declared bounds
            double rest_min = activity_bound(r.terms, lb_, ub_, false, v);
            double rest_max = activity_bound(r.terms, lb_, ub_, true, v);
            if (!std::isfinite(rest_min) || !std::isfinite(rest_max)) {
                if (!(std::isfinite(lb_[v]) || std::isfinite(ub_[v]))) {
                    // genuinely free variable: always safe
                } else continue;
            } else {
                double i1 = (r.rhs - rest_max) / a;
                double i2 = (r.rhs - rest_min) / a;
                double ilo = std::min(i1, i2), ihi = std::max(i1, i2);
                if (ilo < lb_[v] - kTol || ihi > ub_[v] + kTol) continue;
            }
            // fill estimate: occurrences-1 rows gain up to terms-1 entries
            if ((occurs_[v] - 1) * (static_cast<int>(r.terms.size()) - 1) > 48) continue;
            if (pick < 0 || std::abs(a) > pick_abs) { pick = v; pick_abs = std::abs(a); }
        }
        if (pick >= 0) {
            substitute(i, pick);
            changed = true;
        }
    }

    // empty columns: fix at the objective-preferred bound
    for (VarId v = 0; v < static_cast<VarId>(removed_.size()); ++v) {
        if (removed_[v] || occurs_[v] > 0) continue;
        double val;
        if (obj_[v] > 0) val = ub_[v];
        else if (obj_[v] < 0) val = lb_[v];
        else val = std::isfinite(lb_[v]) ? lb_[v] : (std::isfinite(ub_[v]) ? ub_[v] : 0.0);
        if (!std::isfinite(val)) continue;  // unbounded column left to the solver
        fix_var(v, val);
        changed = true;
    }
    return changed;
}

bool Presolve::run() {
    for (int it = 0; it < 30 && !infeasible_; ++it)
        if (!pass()) break;
    return !infeasible_;
}

Model Presolve::build_reduced() const {
    Model m;
    int n = static_cast<int>(removed_.size());
    var_map_.assign(n, -1);
    const auto& vars = orig_.vars();
    for (VarId v = 0; v < n; ++v) {
        if (removed_[v]) continue;
        var_map_[v] = m.add_var(kind_[v], lb_[v], ub_[v], vars[v].name);
        if (vars[v].branch_priority != 0)
            m.set_branch_priority(var_map_[v], vars[v].branch_priority);
        if (obj_[v] != 0.0) m.set_objective_term(var_map_[v], obj_[v]);
    }
    row_map_.assign(rows_.size(), -1);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const Row& r = rows_[i];
        if (r.deleted) continue;
        LinearConstraint c;
        c.sense = r.sense;
        c.rhs = r.rhs;
        c.tag = r.tag;
        for (const auto& [v, a] : r.terms)
            if (var_map_[v] >= 0 && a != 0.0) c.terms.push_back({var_map_[v], a});
        row_map_[i] = static_cast<int>(m.num_constraints());
        m.add_constraint(std::move(c));
    }
    return m;
}

std::vector<double> Presolve::postsolve(const std::vector<double>& reduced_values) const {
    int n = static_cast<int>(removed_.size());
    std::vector<double> x(n, 0.0);
    for (VarId v = 0; v < n; ++v)
        if (var_map_[v] >= 0) x[v] = reduced_values[var_map_[v]];
    for (auto it = actions_.rbegin(); it != actions_.rend(); ++it) {
        if (it->kind == PostAction::Fix) {
            x[it->var] = it->value;
        } else {
            const SubstRecord& s = substs_[it->subst_index];
            double acc = s.rhs;
            for (const auto& [w, a] : s.others) acc -= a * x[w];
            x[it->var] = acc / s.coeff;
        }
    }
    return x;
}

}  // namespace restore::milp
