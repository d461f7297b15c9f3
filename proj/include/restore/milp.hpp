#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "restore/common.hpp"

namespace restore::milp {

using VarId = std::int32_t;

enum class VarKind { Continuous, Binary };

struct Variable {
    VarId id = -1;
    VarKind kind = VarKind::Continuous;
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    int branch_priority = 0;  // higher values are branched first
    std::string name;
};

enum class Sense { Le, Eq, Ge };

struct LinearConstraint {
    std::vector<std::pair<VarId, double>> terms;  // no duplicate ids
    Sense sense = Sense::Le;
    double rhs = 0.0;
    std::string tag;  // provenance (equation id) for audit output
};

/// Generic MILP container. Objective sense is always maximize.
class Model {
public:
    VarId add_var(VarKind kind, double lower, double upper, std::string name = {});
    VarId add_continuous(double lower, double upper, std::string name = {}) {
        return add_var(VarKind::Continuous, lower, upper, std::move(name));
    }
    VarId add_binary(std::string name = {}) {
        return add_var(VarKind::Binary, 0.0, 1.0, std::move(name));
    }

    void add_constraint(LinearConstraint c);
    void add_constraint(std::vector<std::pair<VarId, double>> terms, Sense sense, double rhs,
                        std::string tag = {});

    void set_objective_term(VarId v, double coeff);
    void set_branch_priority(VarId v, int priority);
    double objective_coeff(VarId v) const;

    std::size_t num_vars() const { return vars_.size(); }
    std::size_t num_constraints() const { return cons_.size(); }
    const std::vector<Variable>& vars() const { return vars_; }
    const std::vector<LinearConstraint>& constraints() const { return cons_; }
    const std::vector<double>& objective() const { return obj_; }

    /// Dump in the standard LP text format for cross-checking with external solvers.
    std::string to_lp_format() const;

private:
    std::vector<Variable> vars_;
    std::vector<LinearConstraint> cons_;
    std::vector<double> obj_;  // dense by VarId
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, LimitReached };

struct Solution {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> values;  // dense by VarId
    double objective_value = 0.0;
    std::int64_t nodes_explored = 0;
    /// Best proven upper bound (meaningful for LimitReached with incumbent).
    double bound = std::numeric_limits<double>::infinity();
};

struct SolveOptions {
    double feas_tol = 1e-6;
    double integer_tol = 1e-6;
    double abs_gap = 1e-9;
    std::int64_t node_limit = 1000000;
    double time_limit_s = 60.0;
    bool presolve = true;
};

struct Violation {
    std::string tag;         // constraint tag, or "bound:<name>" / "integrality:<name>"
    double magnitude = 0.0;  // amount by which the row/bound is violated
    std::string detail;
};

/// Check a full assignment against every constraint and bound of the model.
/// Empty result means feasible within feas_tol.
std::vector<Violation> verify_solution(const Model& model, const std::vector<double>& values,
                                       double feas_tol);

/// Solve the LP relaxation (binaries relaxed to [0,1]).
Solution solve_lp_relaxation(const Model& model, const SolveOptions& opts = {});

/// Abstract solver seam so an industrial MILP solver can be plugged in
/// without touching formulation code.
class Solver {
public:
    virtual ~Solver() = default;
    virtual Solution solve(const Model& model, const SolveOptions& opts) = 0;
};

/// Bundled exact solver: presolve, simplex LP relaxation, best-first
/// branch and bound on fractional binaries. Deterministic.
class BranchAndBoundSolver : public Solver {
public:
    Solution solve(const Model& model, const SolveOptions& opts) override;
};

/// Convenience entry point using the bundled solver.
Solution solve(const Model& model, const SolveOptions& opts = {});

}  // namespace restore::milp
