#pragma once

#include <utility>
#include <vector>

namespace restore::milp {

/// Sparse LU factorization of a square basis matrix given by columns, with
/// row partial pivoting (Gilbert-Peierls left-looking elimination). Solves
/// map between row space (right-hand sides) and column-position space
/// (coefficients of the basis columns).
class SparseLU {
public:
    using Column = std::vector<std::pair<int, double>>;

    struct FactorResult {
        bool ok = false;
        int dependent_col = -1;  // column position that had no usable pivot
        int free_row = -1;       // a row still without a pivot at that point
    };

    /// Factor the n x n matrix whose k-th column is *cols[k]. On a singular
    /// matrix, reports the offending column position and an unpivoted row so
    /// the caller can patch the basis and retry.
    FactorResult factor(int n, const std::vector<const Column*>& cols);

    /// Solve B x = b in place; input indexed by row, output by column position.
    void solve(std::vector<double>& x) const;

    /// Solve B^T y = c in place; input indexed by column position, output by row.
    void solve_t(std::vector<double>& x) const;

    int size() const { return n_; }

private:
    int n_ = 0;
    // lcols_[k]: strictly-below-pivot part of L's k-th column, scaled by the
    // pivot, indexed by original row. ucols_[k]: above-diagonal part of U's
    // k-th column, indexed by pivot position; the diagonal lives in udiag_.
    std::vector<Column> lcols_, ucols_;
    std::vector<double> udiag_;
    std::vector<int> pinv_;    // original row -> pivot position, -1 if none
    std::vector<int> porder_;  // pivot position -> original row

    // factorization workspace
    std::vector<double> x_;
    std::vector<int> mark_, dfs_stack_, dfs_edge_, postorder_;
    int stamp_ = 0;
    mutable std::vector<double> tmp_, tmp2_;

    void reach(const Column& col);
};

}  // namespace restore::milp
