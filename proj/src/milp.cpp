#include "restore/milp.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "restore/simplex.hpp"

namespace restore::milp {

VarId Model::add_var(VarKind kind, double lower, double upper, std::string name) {
    if (lower > upper) throw ModelError("variable '" + name + "': lower > upper");
    if (kind == VarKind::Binary && (lower < 0.0 || upper > 1.0))
        throw ModelError("binary variable '" + name + "' bounds outside [0,1]");
    Variable v;
    v.id = static_cast<VarId>(vars_.size());
    v.kind = kind;
    v.lower = lower;
    v.upper = upper;
    v.name = std::move(name);
    vars_.push_back(std::move(v));
    obj_.push_back(0.0);
    return vars_.back().id;
}

void Model::add_constraint(LinearConstraint c) {
    std::set<VarId> seen;
    for (const auto& [v, a] : c.terms) {
        (void)a;
        if (v < 0 || v >= static_cast<VarId>(vars_.size()))
            throw ModelError("constraint '" + c.tag + "' references unknown variable");
        if (!seen.insert(v).second)
            throw ModelError("constraint '" + c.tag + "' has duplicate variable terms");
    }
    cons_.push_back(std::move(c));
}

void Model::add_constraint(std::vector<std::pair<VarId, double>> terms, Sense sense, double rhs,
                           std::string tag) {
    LinearConstraint c;
    c.terms = std::move(terms);
    c.sense = sense;
    c.rhs = rhs;
    c.tag = std::move(tag);
    add_constraint(std::move(c));
}

void Model::set_objective_term(VarId v, double coeff) {
    if (v < 0 || v >= static_cast<VarId>(vars_.size()))
        throw ModelError("objective references unknown variable");
    obj_[v] = coeff;
}

void Model::set_branch_priority(VarId v, int priority) {
    vars_.at(static_cast<std::size_t>(v)).branch_priority = priority;
}

double Model::objective_coeff(VarId v) const { return obj_[v]; }

std::string Model::to_lp_format() const {
    std::ostringstream os;
    os.precision(12);
    auto vname = [&](VarId v) {
        const auto& n = vars_[v].name;
        return n.empty() ? "x" + std::to_string(v) : n;
    };
    os << "Maximize\n obj:";
    bool any = false;
    for (VarId v = 0; v < static_cast<VarId>(vars_.size()); ++v) {
        if (obj_[v] == 0.0) continue;
        os << (obj_[v] >= 0 ? " + " : " - ") << std::abs(obj_[v]) << " " << vname(v);
        any = true;
    }
    if (!any) os << " 0 x0";
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < cons_.size(); ++i) {
        const auto& c = cons_[i];
        os << " c" << i;
        if (!c.tag.empty()) os << "_" << c.tag;
        os << ":";
        for (const auto& [v, a] : c.terms)
            os << (a >= 0 ? " + " : " - ") << std::abs(a) << " " << vname(v);
        os << (c.sense == Sense::Le ? " <= " : c.sense == Sense::Eq ? " = " : " >= ") << c.rhs
           << "\n";
    }
    os << "Bounds\n";
    for (const auto& v : vars_) {
        os << " ";
        if (std::isfinite(v.lower)) os << v.lower << " <= ";
        else os << "-inf <= ";
        os << vname(v.id);
        if (std::isfinite(v.upper)) os << " <= " << v.upper;
        os << "\n";
    }
    os << "Binaries\n";
    for (const auto& v : vars_)
        if (v.kind == VarKind::Binary) os << " " << vname(v.id);
    os << "\nEnd\n";
    return os.str();
}

std::vector<Violation> verify_solution(const Model& model, const std::vector<double>& values,
                                       double feas_tol) {
    std::vector<Violation> out;
    if (values.size() < model.num_vars()) {
        out.push_back({"incomplete", 0.0, "solution does not cover all variables"});
        return out;
    }
    for (const auto& v : model.vars()) {
        double x = values[v.id];
        double viol = std::max(v.lower - x, x - v.upper);
        if (viol > feas_tol)
            out.push_back({"bound:" + (v.name.empty() ? "x" + std::to_string(v.id) : v.name), viol,
                           "value " + std::to_string(x)});
        if (v.kind == VarKind::Binary) {
            double frac = std::abs(x - std::round(x));
            if (frac > feas_tol)
                out.push_back({"integrality:" + (v.name.empty() ? "x" + std::to_string(v.id) : v.name),
                               frac, "value " + std::to_string(x)});
        }
    }
    for (std::size_t i = 0; i < model.constraints().size(); ++i) {
        const auto& c = model.constraints()[i];
        double act = 0.0;
        for (const auto& [v, a] : c.terms) act += a * values[v];
        double viol = 0.0;
        switch (c.sense) {
            case Sense::Le: viol = act - c.rhs; break;
            case Sense::Ge: viol = c.rhs - act; break;
            case Sense::Eq: viol = std::abs(act - c.rhs); break;
        }
        if (viol > feas_tol)
            out.push_back({c.tag.empty() ? "row" + std::to_string(i) : c.tag, viol,
                           "activity " + std::to_string(act) + " vs rhs " + std::to_string(c.rhs)});
    }
    return out;
}

Solution solve_lp_relaxation(const Model& model, const SolveOptions& opts) {
    Simplex sx(model);
    auto r = sx.solve();
    Solution s;
    switch (r.status) {
        case LpStatus::Optimal: s.status = SolveStatus::Optimal; break;
        case LpStatus::Infeasible: s.status = SolveStatus::Infeasible; break;
        case LpStatus::Unbounded: s.status = SolveStatus::Unbounded; break;
        default: s.status = SolveStatus::LimitReached; break;
    }
    (void)opts;
    if (s.status == SolveStatus::Optimal) {
        sx.extract(s.values);
        s.objective_value = r.objective;
        s.bound = r.objective;
    }
    return s;
}

Solution solve(const Model& model, const SolveOptions& opts) {
    BranchAndBoundSolver solver;
    return solver.solve(model, opts);
}

}  // namespace restore::milp
