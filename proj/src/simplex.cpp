#include "restore/simplex.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace restore::milp {

namespace {
constexpr double kPivTol = 1e-9;
constexpr double kFeasTol = 1e-8;
constexpr double kCostTol = 1e-9;
constexpr double kEtaDrop = 1e-13;
constexpr int kMaxEtas = 64;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

Simplex::Simplex(const Model& model) {
    n_ = static_cast<int>(model.num_vars());
    m_ = static_cast<int>(model.num_constraints());
    total_ = n_ + m_;

    lb_.resize(total_);
    ub_.resize(total_);
    cost_.assign(total_, 0.0);
    cols_.resize(total_);
    rhs_.resize(m_);

    const auto& vars = model.vars();
    for (int j = 0; j < n_; ++j) {
        lb_[j] = vars[j].lower;
        ub_[j] = vars[j].upper;
    }
    const auto& obj = model.objective();
    for (int j = 0; j < static_cast<int>(obj.size()); ++j) cost_[j] = obj[j];

    const auto& cons = model.constraints();
    for (int i = 0; i < m_; ++i) {
        const auto& c = cons[i];
        for (const auto& [v, a] : c.terms) cols_[v].push_back({i, a});
        cols_[n_ + i] = {{i, 1.0}};
        rhs_[i] = c.rhs;
        switch (c.sense) {
            case Sense::Le: lb_[n_ + i] = 0.0; ub_[n_ + i] = kInf; break;
            case Sense::Eq: lb_[n_ + i] = 0.0; ub_[n_ + i] = 0.0; break;
            case Sense::Ge: lb_[n_ + i] = -kInf; ub_[n_ + i] = 0.0; break;
        }
    }
    build_initial_basis();
}

void Simplex::build_initial_basis() {
    stat_.assign(total_, NBLower);
    xval_.assign(total_, 0.0);
    basic_.resize(m_);
    for (int j = 0; j < total_; ++j) {
        if (std::isfinite(lb_[j])) {
            stat_[j] = NBLower;
            xval_[j] = lb_[j];
        } else if (std::isfinite(ub_[j])) {
            stat_[j] = NBUpper;
            xval_[j] = ub_[j];
        } else {
            stat_[j] = NBFree;
            xval_[j] = 0.0;
        }
    }
    for (int i = 0; i < m_; ++i) {
        basic_[i] = n_ + i;
        stat_[n_ + i] = Basic;
    }
    factorize();  // identity basis, cannot fail
    recompute_beta();
    recompute_costs();
}

bool Simplex::factorize() {
    std::vector<const SparseLU::Column*> bc(m_);
    for (int tries = 0; tries <= m_; ++tries) {
        for (int k = 0; k < m_; ++k) bc[k] = &cols_[basic_[k]];
        auto fr = lu_.factor(m_, bc);
        if (fr.ok) {
            etas_.clear();
            factorized_ = true;
            return true;
        }
        // Singular basis: replace the dependent member with the slack of a
        // row that has no pivot yet, pushing the member to its nearest bound.
        int slack = n_ + fr.free_row;
        if (fr.free_row < 0 || stat_[slack] == Basic) break;
        int old = basic_[fr.dependent_col];
        stat_[old] = std::isfinite(lb_[old]) ? NBLower
                     : std::isfinite(ub_[old]) ? NBUpper
                                               : NBFree;
        xval_[old] = stat_[old] == NBLower ? lb_[old]
                     : stat_[old] == NBUpper ? ub_[old]
                                             : 0.0;
        basic_[fr.dependent_col] = slack;
        stat_[slack] = Basic;
    }
    factorized_ = false;
    return false;
}

void Simplex::refactor() {
    if (!factorize()) {
        build_initial_basis();
        return;
    }
    recompute_beta();
    recompute_costs();
}

void Simplex::ftran(std::vector<double>& v) const {
    lu_.solve(v);  // rows in, basis positions out
    for (const auto& e : etas_) {
        double t = v[e.pos] / e.pivot;
        if (t != 0.0)
            for (const auto& [k, w] : e.terms) v[k] -= w * t;
        v[e.pos] = t;
    }
}

void Simplex::btran(std::vector<double>& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        double s = v[it->pos];
        for (const auto& [k, w] : it->terms) s -= w * v[k];
        v[it->pos] = s / it->pivot;
    }
    lu_.solve_t(v);  // basis positions in, rows out
}

void Simplex::compute_wcol(int q) {
    wcol_.assign(m_, 0.0);
    for (const auto& [i, a] : cols_[q]) wcol_[i] += a;
    ftran(wcol_);
}

void Simplex::gather_from_rows(const std::vector<double>& y, std::vector<double>& out) const {
    out.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
        double s = 0.0;
        for (const auto& [i, a] : cols_[j]) s += y[i] * a;
        out[j] = s;
    }
    for (int i = 0; i < m_; ++i) out[n_ + i] = y[i];
}

void Simplex::compute_pivot_row(int pos) {
    work_.assign(m_, 0.0);
    work_[pos] = 1.0;
    btran(work_);
    gather_from_rows(work_, alpha_);
}

void Simplex::basis_change(int pos, int q) {
    Eta e;
    e.pos = pos;
    e.pivot = wcol_[pos];
    for (int k = 0; k < m_; ++k)
        if (k != pos && std::abs(wcol_[k]) > kEtaDrop) e.terms.push_back({k, wcol_[k]});
    etas_.push_back(std::move(e));
    basic_[pos] = q;
    stat_[q] = Basic;
}

void Simplex::update_costs_after_pivot(int q) {
    double fd = d_[q];
    if (fd != 0.0) {
        double f = fd / alpha_[q];
        for (int j = 0; j < total_; ++j) d_[j] -= f * alpha_[j];
    }
    d_[q] = 0.0;
}

void Simplex::recompute_beta() {
    // beta = B^-1 (b - A_N x_N)
    work_ = rhs_;
    for (int j = 0; j < total_; ++j) {
        if (stat_[j] == Basic || xval_[j] == 0.0) continue;
        double xj = xval_[j];
        for (const auto& [i, a] : cols_[j]) work_[i] -= a * xj;
    }
    beta_ = work_;
    ftran(beta_);
}

void Simplex::recompute_costs() {
    // y = B^-T c_B; d_j = c_j - y A_j
    work_.assign(m_, 0.0);
    for (int k = 0; k < m_; ++k) work_[k] = cost_[basic_[k]];
    btran(work_);
    gather_from_rows(work_, d_);
    for (int j = 0; j < total_; ++j) d_[j] = cost_[j] - d_[j];
    for (int k = 0; k < m_; ++k) d_[basic_[k]] = 0.0;
}

void Simplex::update_devex(int pos, int q) {
    // Called with the pivot row in alpha_; the leaving variable still sits at
    // basis position pos.
    double piv = alpha_[q];
    double wq = devex_[q] / (piv * piv);
    bool overflow = false;
    for (int j = 0; j < total_; ++j) {
        if (stat_[j] == Basic || j == q) continue;
        double a = alpha_[j];
        if (a == 0.0) continue;
        double cand = a * a * wq;
        if (cand > devex_[j]) {
            devex_[j] = cand;
            overflow |= cand > 1e8;
        }
    }
    devex_[basic_[pos]] = std::max(1.0, wq);
    if (overflow) reset_devex();
}

double Simplex::infeasibility() const {
    double f = 0.0;
    for (int i = 0; i < m_; ++i) {
        int p = basic_[i];
        if (beta_[i] < lb_[p]) f += lb_[p] - beta_[i];
        else if (beta_[i] > ub_[p]) f += beta_[i] - ub_[p];
    }
    return f;
}

bool Simplex::deadline_hit(long& iters) const {
    if ((iters & 255) != 0) return false;
    if (deadline == std::chrono::steady_clock::time_point{}) return false;
    if (std::chrono::steady_clock::now() < deadline) return false;
    iters = iteration_limit;  // report the stop as an iteration-limit one
    return true;
}

bool Simplex::phase1(long& iters) {
    long stall = 0;
    double last_f = kInf;
    reset_devex();
    std::vector<double> s(m_), w;
    while (true) {
        double f = infeasibility();
        if (f <= kFeasTol) return true;
        if (iters >= iteration_limit || deadline_hit(iters)) return false;
        if (f < last_f - 1e-12) { last_f = f; stall = 0; } else ++stall;
        bool bland = stall > 300;

        // Phase-1 gradient w = A^T B^-T s over the infeasible rows; moving
        // x_j by dir changes the total infeasibility at rate dir*w_j.
        s.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            int p = basic_[i];
            if (beta_[i] < lb_[p] - kFeasTol) s[i] = 1.0;
            else if (beta_[i] > ub_[p] + kFeasTol) s[i] = -1.0;
        }
        btran(s);
        gather_from_rows(s, w);

        int q = -1, dir = 0;
        double best = 0.0;
        for (int j = 0; j < total_; ++j) {
            if (stat_[j] == Basic) continue;
            if (ub_[j] - lb_[j] < 1e-14) continue;  // fixed
            double wj = w[j];
            int dj = 0;
            if ((stat_[j] == NBLower || stat_[j] == NBFree) && wj < -kCostTol) dj = 1;
            else if ((stat_[j] == NBUpper || stat_[j] == NBFree) && wj > kCostTol) dj = -1;
            if (!dj) continue;
            if (bland) { q = j; dir = dj; break; }
            double score = wj * wj / devex_[j];
            if (score > best) { best = score; q = j; dir = dj; }
        }
        if (q < 0) return false;  // no descent direction: infeasible

        compute_wcol(q);

        // Ratio test: feasible basics stay in bounds, infeasible basics may
        // travel to their violated bound, entering may flip its own bound.
        double delta = ub_[q] - lb_[q];
        int rlv = -1;
        double rbound = 0.0;
        for (int i = 0; i < m_; ++i) {
            double a = wcol_[i];
            if (std::abs(a) < kPivTol) continue;
            int p = basic_[i];
            double chg = -a * dir;  // d(beta_i)/d(step)
            double lim = kInf, tgt = 0.0;
            if (beta_[i] < lb_[p] - kFeasTol) {
                if (chg > 0) { lim = (lb_[p] - beta_[i]) / chg; tgt = lb_[p]; }
            } else if (beta_[i] > ub_[p] + kFeasTol) {
                if (chg < 0) { lim = (ub_[p] - beta_[i]) / chg; tgt = ub_[p]; }
            } else if (chg > 0) {
                if (std::isfinite(ub_[p])) { lim = (ub_[p] - beta_[i]) / chg; tgt = ub_[p]; }
            } else {
                if (std::isfinite(lb_[p])) { lim = (lb_[p] - beta_[i]) / chg; tgt = lb_[p]; }
            }
            if (lim < -1e-12) lim = 0.0;
            if (lim < delta - 1e-12) {
                delta = lim;
                rlv = i;
                rbound = tgt;
            } else if (lim < delta + 1e-12 && rlv >= 0) {
                // tie: lowest index under Bland, largest pivot otherwise
                bool better = bland ? p < basic_[rlv] : std::abs(a) > std::abs(wcol_[rlv]);
                if (better) { rlv = i; rbound = tgt; }
            }
        }
        if (!std::isfinite(delta)) return false;  // cannot happen with finite f
        if (delta < 0) delta = 0;

        ++iters;
        if (rlv < 0) {
            // bound flip of entering variable
            double step = (ub_[q] - lb_[q]) * dir;
            for (int i = 0; i < m_; ++i) beta_[i] -= wcol_[i] * step;
            xval_[q] = dir > 0 ? ub_[q] : lb_[q];
            stat_[q] = dir > 0 ? NBUpper : NBLower;
            continue;
        }
        double enter_val = xval_[q] + dir * delta;
        for (int i = 0; i < m_; ++i) beta_[i] -= wcol_[i] * dir * delta;
        int p = basic_[rlv];
        xval_[p] = rbound;
        stat_[p] = (rbound == ub_[p] && std::isfinite(ub_[p]) && rbound != lb_[p]) ? NBUpper : NBLower;
        compute_pivot_row(rlv);
        update_devex(rlv, q);
        basis_change(rlv, q);
        beta_[rlv] = enter_val;
        if (static_cast<int>(etas_.size()) >= kMaxEtas) {
            if (!factorize()) { build_initial_basis(); continue; }
            recompute_beta();
        }
    }
}

LpStatus Simplex::phase2(long& iters) {
    long stall = 0;
    double last_obj = -kInf;
    reset_devex();
    while (true) {
        if (iters >= iteration_limit || deadline_hit(iters)) return LpStatus::IterLimit;
        double obj = objective_value();
        if (obj > last_obj + 1e-12) { last_obj = obj; stall = 0; } else ++stall;
        bool bland = stall > 300;

        int q = -1, dir = 0;
        double best = 0.0;
        for (int j = 0; j < total_; ++j) {
            if (stat_[j] == Basic) continue;
            if (ub_[j] - lb_[j] < 1e-14) continue;
            double dj = d_[j];
            int dd = 0;
            if ((stat_[j] == NBLower || stat_[j] == NBFree) && dj > kCostTol) dd = 1;
            else if ((stat_[j] == NBUpper || stat_[j] == NBFree) && dj < -kCostTol) dd = -1;
            if (!dd) continue;
            if (bland) { q = j; dir = dd; break; }
            double score = dj * dj / devex_[j];
            if (score > best) { best = score; q = j; dir = dd; }
        }
        if (q < 0) return LpStatus::Optimal;

        compute_wcol(q);

        double delta = ub_[q] - lb_[q];
        int rlv = -1;
        double rbound = 0.0;
        for (int i = 0; i < m_; ++i) {
            double a = wcol_[i];
            if (std::abs(a) < kPivTol) continue;
            int p = basic_[i];
            double chg = -a * dir;
            double lim = kInf, tgt = 0.0;
            if (chg > 0) {
                if (std::isfinite(ub_[p])) { lim = (ub_[p] - beta_[i]) / chg; tgt = ub_[p]; }
            } else {
                if (std::isfinite(lb_[p])) { lim = (lb_[p] - beta_[i]) / chg; tgt = lb_[p]; }
            }
            if (lim < -1e-12) lim = 0.0;
            if (lim < delta - 1e-12) {
                delta = lim;
                rlv = i;
                rbound = tgt;
            } else if (lim < delta + 1e-12 && rlv >= 0) {
                bool better = bland ? p < basic_[rlv] : std::abs(a) > std::abs(wcol_[rlv]);
                if (better) { rlv = i; rbound = tgt; }
            }
        }
        if (!std::isfinite(delta)) return LpStatus::Unbounded;
        if (delta < 0) delta = 0;

        ++iters;
        if (rlv < 0) {
            double step = (ub_[q] - lb_[q]) * dir;
            for (int i = 0; i < m_; ++i) beta_[i] -= wcol_[i] * step;
            xval_[q] = dir > 0 ? ub_[q] : lb_[q];
            stat_[q] = dir > 0 ? NBUpper : NBLower;
            continue;
        }
        double enter_val = xval_[q] + dir * delta;
        for (int i = 0; i < m_; ++i) beta_[i] -= wcol_[i] * dir * delta;
        int p = basic_[rlv];
        xval_[p] = rbound;
        stat_[p] = (rbound == ub_[p] && std::isfinite(ub_[p]) && rbound != lb_[p]) ? NBUpper : NBLower;
        compute_pivot_row(rlv);
        update_devex(rlv, q);
        update_costs_after_pivot(q);
        basis_change(rlv, q);
        beta_[rlv] = enter_val;
        if (static_cast<int>(etas_.size()) >= kMaxEtas) {
            if (!factorize()) { build_initial_basis(); continue; }
            recompute_beta();
            recompute_costs();
        }
    }
}

LpStatus Simplex::dual_phase(long& iters) {
    // Degenerate dual pivots can cycle; beyond this budget the caller falls
    // back to the primal method, which has a Bland safeguard.
    const long budget = iters + 2L * m_ + 200;
    while (true) {
        if (iters >= iteration_limit || iters >= budget || deadline_hit(iters))
            return LpStatus::IterLimit;
        int rlv = -1;
        double worst = kFeasTol;
        int rho = 0;
        for (int i = 0; i < m_; ++i) {
            int p = basic_[i];
            double v = 0.0;
            int s = 0;
            if (beta_[i] < lb_[p] - kFeasTol) { v = lb_[p] - beta_[i]; s = 1; }
            else if (beta_[i] > ub_[p] + kFeasTol) { v = beta_[i] - ub_[p]; s = -1; }
            if (v > worst) { worst = v; rlv = i; rho = s; }
        }
        if (rlv < 0) return LpStatus::Optimal;  // primal feasible

        compute_pivot_row(rlv);
        int p = basic_[rlv];
        // entering: candidate q whose movement raises (rho=+1) / lowers x_p,
        // min dual ratio |d_q / alpha_q|
        int q = -1, qdir = 0;
        double bestratio = kInf, bestpiv = 0.0;
        for (int j = 0; j < total_; ++j) {
            if (stat_[j] == Basic) continue;
            if (ub_[j] - lb_[j] < 1e-14) continue;
            double a = alpha_[j];
            if (std::abs(a) < kPivTol) continue;
            int dj = 0;
            // x_p change per unit of x_j movement is -a*dj; need sign rho
            if ((stat_[j] == NBLower || stat_[j] == NBFree) && a * rho < 0) dj = 1;
            else if ((stat_[j] == NBUpper || stat_[j] == NBFree) && a * rho > 0) dj = -1;
            if (!dj) continue;
            double ratio = std::abs(d_[j]) / std::abs(a);
            if (ratio < bestratio - 1e-12 ||
                (ratio < bestratio + 1e-12 && (q < 0 || std::abs(a) > bestpiv))) {
                bestratio = ratio;
                bestpiv = std::abs(a);
                q = j;
                qdir = dj;
            }
        }
        if (q < 0) return LpStatus::Infeasible;

        double target = rho > 0 ? lb_[p] : ub_[p];
        double need = std::abs(target - beta_[rlv]);
        double a = alpha_[q];
        double delta = need / std::abs(a);
        ++iters;
        compute_wcol(q);
        double range = ub_[q] - lb_[q];
        if (std::isfinite(range) && delta > range + 1e-12) {
            // bound flip of entering variable; leaving row stays infeasible
            double step = range * qdir;
            for (int i = 0; i < m_; ++i) beta_[i] -= wcol_[i] * step;
            xval_[q] = qdir > 0 ? ub_[q] : lb_[q];
            stat_[q] = qdir > 0 ? NBUpper : NBLower;
            continue;
        }
        double enter_val = xval_[q] + qdir * delta;
        for (int i = 0; i < m_; ++i) beta_[i] -= wcol_[i] * qdir * delta;
        xval_[p] = target;
        stat_[p] = rho > 0 ? NBLower : NBUpper;
        update_costs_after_pivot(q);
        basis_change(rlv, q);
        beta_[rlv] = enter_val;
        if (static_cast<int>(etas_.size()) >= kMaxEtas) {
            if (!factorize()) { build_initial_basis(); continue; }
            recompute_beta();
            recompute_costs();
        }
    }
}

Simplex::Result Simplex::solve() {
    build_initial_basis();
    Result res;
    long iters = 0;
    if (!phase1(iters)) {
        res.status = iters >= iteration_limit ? LpStatus::IterLimit : LpStatus::Infeasible;
        res.iterations = iters;
        return res;
    }
    recompute_beta();
    recompute_costs();
    res.status = phase2(iters);
    if (res.status == LpStatus::Optimal) {
        recompute_beta();
        if (infeasibility() > 1e-6) {
            // numerical drift: one repair pass
            recompute_costs();
            if (!phase1(iters)) res.status = LpStatus::Singular;
            else {
                recompute_costs();
                res.status = phase2(iters);
                recompute_beta();
            }
        }
    }
    res.objective = objective_value();
    res.iterations = iters;
    return res;
}

Simplex::Result Simplex::reoptimize() {
    // Long eta chains drift numerically, which can turn into false
    // infeasibility certificates. Refactorize on a cadence, and never trust
    // an infeasibility verdict from a stale factorization.
    if (static_cast<int>(etas_.size()) > kMaxEtas / 2) refactor();
    Result res = reoptimize_once();
    if (res.status == LpStatus::Infeasible && !etas_.empty()) {
        refactor();
        res = reoptimize_once();
    }
    if (res.status == LpStatus::Optimal && !std::isfinite(res.objective)) {
        // numerically wrecked state: rebuild everything from scratch
        res = solve();
    }
    return res;
}

Simplex::Result Simplex::reoptimize_once() {
    Result res;
    long iters = 0;
    // Clamp nonbasics into their (possibly changed) bounds.
    for (int j = 0; j < total_; ++j) {
        if (stat_[j] == Basic) continue;
        if (stat_[j] == NBFree) {
            if (std::isfinite(lb_[j]) && xval_[j] < lb_[j]) { stat_[j] = NBLower; xval_[j] = lb_[j]; }
            else if (std::isfinite(ub_[j]) && xval_[j] > ub_[j]) { stat_[j] = NBUpper; xval_[j] = ub_[j]; }
            continue;
        }
        double want = stat_[j] == NBLower ? lb_[j] : ub_[j];
        if (!std::isfinite(want)) {
            stat_[j] = stat_[j] == NBLower ? NBUpper : NBLower;
            want = stat_[j] == NBLower ? lb_[j] : ub_[j];
            if (!std::isfinite(want)) { stat_[j] = NBFree; want = 0.0; }
        }
        xval_[j] = want;
    }
    recompute_beta();

    // Dual feasibility check (fixed vars exempt).
    bool dual_ok = true;
    for (int j = 0; j < total_ && dual_ok; ++j) {
        if (stat_[j] == Basic || ub_[j] - lb_[j] < 1e-14) continue;
        if (stat_[j] == NBLower && d_[j] > 1e-7) dual_ok = false;
        if (stat_[j] == NBUpper && d_[j] < -1e-7) dual_ok = false;
        if (stat_[j] == NBFree && std::abs(d_[j]) > 1e-7) dual_ok = false;
    }

    LpStatus st;
    if (dual_ok) {
        st = dual_phase(iters);
        if (st == LpStatus::Optimal) {
            st = phase2(iters);  // usually 0 iterations
        }
        else if ((st == LpStatus::IterLimit || st == LpStatus::Infeasible) &&
                 iters < iteration_limit) {
            // dual infeasibility certificates degrade with factorization
            // drift, so every claim is re-proven by the primal phase-1 method
            recompute_beta();
            if (!phase1(iters)) {
                res.status = iters >= iteration_limit ? LpStatus::IterLimit : LpStatus::Infeasible;
                res.iterations = iters;
                return res;
            }
            recompute_costs();
            st = phase2(iters);
        }
    } else {
        if (!phase1(iters)) {
            res.status = iters >= iteration_limit ? LpStatus::IterLimit : LpStatus::Infeasible;
            res.iterations = iters;
            return res;
        }
        recompute_costs();
        st = phase2(iters);
    }
    if (st == LpStatus::Optimal) {
        recompute_beta();
        if (infeasibility() > 1e-6) return solve();
    }
    res.status = st;
    res.objective = objective_value();
    res.iterations = iters;
    return res;
}

void Simplex::set_bound(VarId v, double lo, double hi) {
    lb_[v] = lo;
    ub_[v] = hi;
}

double Simplex::value(VarId v) const {
    if (stat_[v] == Basic) {
        for (int i = 0; i < m_; ++i)
            if (basic_[i] == v) return beta_[i];
        return 0.0;
    }
    return xval_[v];
}

double Simplex::objective_value() const {
    double obj = 0.0;
    for (int j = 0; j < total_; ++j) {
        if (cost_[j] == 0.0 || stat_[j] == Basic) continue;
        obj += cost_[j] * xval_[j];
    }
    for (int i = 0; i < m_; ++i) obj += cost_[basic_[i]] * beta_[i];
    return obj;
}

void Simplex::extract(std::vector<double>& out) const {
    out.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j)
        if (stat_[j] != Basic) out[j] = xval_[j];
    for (int i = 0; i < m_; ++i)
        if (basic_[i] < n_) out[basic_[i]] = beta_[i];
}

Simplex::Basis Simplex::save_basis() const { return {stat_, basic_}; }

void Simplex::load_basis(const Basis& b) {
    stat_ = b.status;
    basic_ = b.basic;
    if (!factorize()) {
        build_initial_basis();
        return;
    }
    for (int j = 0; j < total_; ++j) {
        if (stat_[j] == Basic) continue;
        xval_[j] = stat_[j] == NBLower ? lb_[j] : stat_[j] == NBUpper ? ub_[j] : 0.0;
        if (!std::isfinite(xval_[j])) xval_[j] = 0.0;
    }
    recompute_beta();
    recompute_costs();
}

}  // namespace restore::milp
