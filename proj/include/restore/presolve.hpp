#pragma once

#include <optional>
#include <vector>

#include "restore/milp.hpp"

namespace restore::milp {

/// Exactness-preserving model reduction: bound propagation, forcing and
/// redundant row elimination, singleton rows, and substitution of implied-free
/// continuous variables out of equality rows. Every reduction is recorded so
/// postsolve() can recover a full assignment for the original model.
class Presolve {
public:
    explicit Presolve(const Model& original);

    /// Returns false when the model is proven infeasible during reduction.
    bool run();

    Model build_reduced() const;
    double objective_offset() const { return obj_offset_; }

    /// Reduced-space index of an original variable, or -1 if eliminated.
    VarId reduced_index(VarId original) const { return var_map_[original]; }

    /// Recover original-space values from a reduced-space solution.
    std::vector<double> postsolve(const std::vector<double>& reduced_values) const;

private:
    struct Row {
        std::vector<std::pair<VarId, double>> terms;
        Sense sense;
        double rhs;
        std::string tag;
        bool deleted = false;
    };
    struct SubstRecord {
        VarId var;
        double coeff;                                   // coefficient of var in the row
        double rhs;                                     // row rhs at substitution time
        std::vector<std::pair<VarId, double>> others;   // remaining row terms
    };
    struct PostAction {
        enum Kind { Fix, Subst } kind;
        VarId var;
        double value;       // Fix
        int subst_index;    // Subst
    };

    const Model& orig_;
    std::vector<Row> rows_;
    std::vector<double> lb_, ub_;
    std::vector<VarKind> kind_;
    std::vector<double> obj_;
    std::vector<bool> removed_;
    std::vector<int> occurs_;   // live row count per var
    double obj_offset_ = 0.0;
    bool infeasible_ = false;

    std::vector<PostAction> actions_;
    std::vector<SubstRecord> substs_;
    mutable std::vector<VarId> var_map_;
    mutable std::vector<int> row_map_;

    bool is_int(VarId v) const { return kind_[v] == VarKind::Binary; }
    void fix_var(VarId v, double val);
    bool tighten(VarId v, double lo, double hi);
    void substitute(int row_index, VarId v);
    bool pass();
    void drop_row(int i);
};

/// Solve via presolve + branch and bound + postsolve. Used by the bundled solver.
Solution solve_with_presolve(const Model& model, const SolveOptions& opts);

}  // namespace restore::milp
