#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "restore/milp.hpp"
#include "restore/sparse_lu.hpp"

namespace restore::milp {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit, Singular };

/// Bounded-variable primal/dual revised simplex over a sparse LU-factorized
/// basis with product-form eta updates between refactorizations.
///
/// Variables 0..n-1 are the model's structural variables; n..n+m-1 are row
/// slacks (Le -> [0,inf), Eq -> [0,0], Ge -> (-inf,0]). Phase 1 is a
/// composite infeasibility minimization; phase 2 maximizes the model
/// objective with Devex pricing. Dual re-optimization after bound changes
/// supports warm-started branch and bound. Deterministic tie-breaking, so
/// identical inputs give identical pivots.
class Simplex {
public:
    explicit Simplex(const Model& model);

    struct Result {
        LpStatus status = LpStatus::Infeasible;
        double objective = 0.0;
        long iterations = 0;
    };

    /// Full solve from a fresh slack basis (phase 1 + phase 2).
    Result solve();

    /// Re-optimize after set_bound() calls, keeping the current basis.
    /// Runs dual simplex first, then primal cleanup if needed.
    Result reoptimize();

    void set_bound(VarId v, double lo, double hi);
    double lower(VarId v) const { return lb_[v]; }
    double upper(VarId v) const { return ub_[v]; }

    /// Value of structural variable v in the current basis.
    double value(VarId v) const;
    double objective_value() const;
    void extract(std::vector<double>& out) const;  // structural values only

    struct Basis {
        std::vector<std::uint8_t> status;
        std::vector<std::int32_t> basic;
    };
    Basis save_basis() const;
    void load_basis(const Basis& b);  // refactorizes for this basis

    long iteration_limit = 200000;

    /// Optional wall-clock cutoff; phases stop with IterLimit once past it.
    /// Default-constructed time point means no cutoff.
    std::chrono::steady_clock::time_point deadline{};

private:
    enum Status : std::uint8_t { NBLower, NBUpper, NBFree, Basic };

    int n_ = 0;  // structural vars
    int m_ = 0;  // rows
    int total_ = 0;

    std::vector<double> beta_;  // basic variable values, by basis position
    std::vector<double> d_;     // reduced costs (phase-2 objective)
    std::vector<double> lb_, ub_, xval_, cost_;
    std::vector<std::uint8_t> stat_;
    std::vector<std::int32_t> basic_;  // basis position -> variable

    // original matrix by column (structural only; slacks are unit)
    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<double> rhs_;

    // factorized basis plus eta updates accumulated since the last refactor
    SparseLU lu_;
    struct Eta {
        int pos;  // replaced basis position
        double pivot;
        std::vector<std::pair<int, double>> terms;  // other positions of B^-1 a_q
    };
    std::vector<Eta> etas_;
    bool factorized_ = false;

    // per-iteration workspaces
    std::vector<double> wcol_;   // B^-1 a_q, by basis position
    std::vector<double> alpha_;  // pivot row over all variables
    std::vector<double> work_;   // rows / positions scratch

    // Devex reference weights for primal pricing; reset with the framework
    // whenever they grow past the cap.
    std::vector<double> devex_;
    void reset_devex() { devex_.assign(total_, 1.0); }
    void update_devex(int pos, int q);

    void build_initial_basis();
    bool factorize();            // LU of the current basic_ set, with repair
    void refactor();             // factorize + recompute beta and costs
    void ftran(std::vector<double>& v) const;  // rows in, positions out
    void btran(std::vector<double>& v) const;  // positions in, rows out
    void load_column(int var, std::vector<double>& v) const;  // dense by row
    void compute_wcol(int q);        // wcol_ = B^-1 a_q
    void compute_pivot_row(int pos);  // alpha_ = e_pos^T B^-1 [A | I]
    void gather_from_rows(const std::vector<double>& y, std::vector<double>& out) const;
    void basis_change(int pos, int q);  // eta append + bookkeeping
    void update_costs_after_pivot(int q);
    void recompute_beta();
    void recompute_costs();
    Result reoptimize_once();
    bool deadline_hit(long& iters) const;
    bool phase1(long& iters);
    LpStatus phase2(long& iters);
    LpStatus dual_phase(long& iters);
    double infeasibility() const;
};

}  // namespace restore::milp
