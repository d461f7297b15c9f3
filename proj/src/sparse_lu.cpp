#include "restore/sparse_lu.hpp"

#include <cmath>

namespace restore::milp {

namespace {
constexpr double kPivotTol = 1e-10;
constexpr double kDropTol = 1e-14;
}  // namespace

// Depth-first search over the partial L pattern from every nonzero of the
// incoming column; the reverse of postorder_ is a valid elimination order.
void SparseLU::reach(const Column& col) {
    ++stamp_;
    postorder_.clear();
    for (const auto& [start, v] : col) {
        (void)v;
        if (mark_[start] == stamp_) continue;
        dfs_stack_.clear();
        dfs_edge_.clear();
        dfs_stack_.push_back(start);
        dfs_edge_.push_back(0);
        mark_[start] = stamp_;
        while (!dfs_stack_.empty()) {
            int r = dfs_stack_.back();
            int kp = pinv_[r];
            bool descended = false;
            if (kp >= 0) {
                const auto& lc = lcols_[kp];
                int& e = dfs_edge_.back();
                while (e < static_cast<int>(lc.size())) {
                    int child = lc[e++].first;
                    if (mark_[child] != stamp_) {
                        mark_[child] = stamp_;
                        dfs_stack_.push_back(child);
                        dfs_edge_.push_back(0);
                        descended = true;
                        break;
                    }
                }
            }
            if (!descended) {
                postorder_.push_back(r);
                dfs_stack_.pop_back();
                dfs_edge_.pop_back();
            }
        }
    }
}

SparseLU::FactorResult SparseLU::factor(int n, const std::vector<const Column*>& cols) {
    n_ = n;
    lcols_.assign(n, {});
    ucols_.assign(n, {});
    udiag_.assign(n, 0.0);
    pinv_.assign(n, -1);
    porder_.assign(n, -1);
    x_.assign(n, 0.0);
    mark_.assign(n, 0);
    stamp_ = 0;

    for (int k = 0; k < n; ++k) {
        const Column& col = *cols[k];
        reach(col);
        for (const auto& [r, v] : col) x_[r] += v;

        // Eliminate in topological order (reverse postorder).
        for (auto it = postorder_.rbegin(); it != postorder_.rend(); ++it) {
            int r = *it;
            int kp = pinv_[r];
            if (kp < 0) continue;
            double xr = x_[r];
            if (xr == 0.0) continue;
            for (const auto& [i, lv] : lcols_[kp]) x_[i] -= lv * xr;
        }

        // Split into U entries (pivoted rows) and pivot candidates.
        int prow = -1;
        double pval = 0.0;
        for (int r : postorder_) {
            double v = x_[r];
            if (pinv_[r] < 0 && std::abs(v) > std::abs(pval)) {
                prow = r;
                pval = v;
            }
        }
        if (prow < 0 || std::abs(pval) <= kPivotTol) {
            FactorResult res;
            res.dependent_col = k;
            for (int r = 0; r < n; ++r)
                if (pinv_[r] < 0) {
                    res.free_row = r;
                    break;
                }
            for (int r : postorder_) x_[r] = 0.0;
            return res;
        }
        for (int r : postorder_) {
            double v = x_[r];
            x_[r] = 0.0;
            if (std::abs(v) <= kDropTol) continue;
            if (pinv_[r] >= 0)
                ucols_[k].push_back({pinv_[r], v});
            else if (r != prow)
                lcols_[k].push_back({r, v / pval});
        }
        pinv_[prow] = k;
        porder_[k] = prow;
        udiag_[k] = pval;
    }
    FactorResult res;
    res.ok = true;
    return res;
}

void SparseLU::solve(std::vector<double>& x) const {
    // forward: L z = b, rows in original indexing
    for (int k = 0; k < n_; ++k) {
        double xr = x[porder_[k]];
        if (xr == 0.0) continue;
        for (const auto& [i, lv] : lcols_[k]) x[i] -= lv * xr;
    }
    tmp_.resize(n_);
    for (int k = 0; k < n_; ++k) tmp_[k] = x[porder_[k]];
    // backward: U w = z, everything in pivot-position indexing
    for (int k = n_ - 1; k >= 0; --k) {
        double w = tmp_[k] / udiag_[k];
        tmp_[k] = w;
        if (w == 0.0) continue;
        for (const auto& [i, uv] : ucols_[k]) tmp_[i] -= uv * w;
    }
    x = tmp_;
}

void SparseLU::solve_t(std::vector<double>& x) const {
    // forward: U^T v = c, pivot-position indexing
    tmp_.resize(n_);
    for (int k = 0; k < n_; ++k) {
        double s = x[k];
        for (const auto& [i, uv] : ucols_[k]) s -= uv * tmp_[i];
        tmp_[k] = s / udiag_[k];
    }
    // backward: L^T z = v; lcols_ rows are original, map through pinv_
    for (int k = n_ - 1; k >= 0; --k) {
        double s = tmp_[k];
        for (const auto& [i, lv] : lcols_[k]) s -= lv * tmp_[pinv_[i]];
        tmp_[k] = s;
    }
    tmp2_.resize(n_);
    for (int r = 0; r < n_; ++r) tmp2_[r] = tmp_[pinv_[r]];
    x = tmp2_;
}

}  // namespace restore::milp
