#include "ieh/lp.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace ieh {

void LinearProgram::validate() const {
    const auto m = rhs.size();
    const auto n = objective.size();
    if (constraints.rows() != m || static_cast<Eigen::Index>(senses.size()) != m)
        throw StructuralError("LinearProgram: row count mismatch (matrix " +
                              std::to_string(constraints.rows()) + ", senses " +
                              std::to_string(senses.size()) + ", rhs " +
                              std::to_string(m) + ")");
    if (constraints.cols() != n || lower.size() != n || upper.size() != n)
        throw StructuralError("LinearProgram: column count mismatch (matrix " +
                              std::to_string(constraints.cols()) + ", objective " +
                              std::to_string(n) + ", bounds " +
                              std::to_string(lower.size()) + "/" +
                              std::to_string(upper.size()) + ")");
    for (Eigen::Index j = 0; j < n; ++j)
        if (lower[j] > upper[j])
            throw StructuralError("LinearProgram: lower > upper for variable " +
                                  std::to_string(j));
}

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "Optimal";
        case LpStatus::Infeasible: return "Infeasible";
        case LpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

double FeasibilityReport::max_violation() const {
    double v = 0.0;
    for (const auto& x : violations) v = std::max(v, x.amount);
    return v;
}

FeasibilityReport check_feasible(const LinearProgram& lp,
                                 const Eigen::VectorXd& point, double tol) {
    lp.validate();
    if (point.size() != lp.objective.size())
        throw StructuralError("check_feasible: point length " +
                              std::to_string(point.size()) + " != variable count " +
                              std::to_string(lp.objective.size()));
    FeasibilityReport rep;
    const Eigen::VectorXd ax = lp.constraints * point;
    for (int i = 0; i < lp.num_rows(); ++i) {
        const double r = ax[i] - lp.rhs[i];
        double viol = 0.0;
        switch (lp.senses[i]) {
            case RowSense::LessEqual: viol = r; break;
            case RowSense::GreaterEqual: viol = -r; break;
            case RowSense::Equal: viol = std::abs(r); break;
        }
        if (viol > tol)
            rep.violations.push_back({Violation::Kind::Row, i, viol});
    }
    for (int j = 0; j < lp.num_vars(); ++j) {
        if (point[j] < lp.lower[j] - tol)
            rep.violations.push_back(
                {Violation::Kind::LowerBound, j, lp.lower[j] - point[j]});
        if (point[j] > lp.upper[j] + tol)
            rep.violations.push_back(
                {Violation::Kind::UpperBound, j, point[j] - lp.upper[j]});
    }
    return rep;
}

namespace {

// Variable layout: [0, n) structural, [n, n+m) slack, [n+m, n+2m) artificial.
class Simplex {
public:
    Simplex(const LinearProgram& lp, const SolverOptions& opts)
        : lp_(lp), opts_(opts), m_(lp.num_rows()), n_(lp.num_vars()) {}

    LpSolution run() {
        setup();
        LpSolution sol;
        // Phase 1: minimize the sum of artificials.
        phase_ = 1;
        LpStatus st = optimize();
        if (st == LpStatus::Unbounded)
            throw NonConvergence("simplex: phase-1 reported unbounded");
        if (phase1_objective() > phase1_tol()) {
            sol.status = LpStatus::Infeasible;
            sol.iterations = iterations_;
            return sol;
        }
        // Freeze artificials at zero and re-optimize with the real objective.
        for (int j = n_ + m_; j < total_; ++j) {
            ub_[j] = 0.0;
            if (in_basis_[j] < 0) x_[j] = 0.0;
        }
        refactorize();
        phase_ = 2;
        st = optimize();
        sol.iterations = iterations_;
        if (st == LpStatus::Unbounded) {
            sol.status = LpStatus::Unbounded;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.primal = Eigen::VectorXd(n_);
        for (int j = 0; j < n_; ++j) sol.primal[j] = value(j);
        sol.duals = dual_vector();
        sol.objective = lp_.objective.dot(sol.primal);
        return sol;
    }

private:
    const LinearProgram& lp_;
    SolverOptions opts_;
    int m_, n_, total_ = 0;
    // Compressed copy of the structural columns; the matrices this solver
    // sees are nearly all zeros, so products go through this instead of the
    // dense storage.
    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<double> lb_, ub_, x_;  // x_ holds nonbasic values only
    std::vector<double> art_sign_;
    std::vector<int> basis_;     // basis_[row] = variable index
    std::vector<int> in_basis_;  // variable -> row, or -1
    Eigen::VectorXd xB_;
    Eigen::MatrixXd Binv_;
    int iterations_ = 0;
    int pivots_since_refactor_ = 0;
    int degenerate_streak_ = 0;
    int phase_ = 1;

    double phase1_tol() const { return std::max(opts_.feas_tol, 1e-10) * 100.0; }

    double value(int j) const {
        return in_basis_[j] < 0 ? x_[j] : xB_[in_basis_[j]];
    }

    void setup() {
        lp_.validate();
        total_ = n_ + 2 * m_;
        lb_.assign(total_, 0.0);
        ub_.assign(total_, 0.0);
        x_.assign(total_, 0.0);
        art_sign_.assign(m_, 1.0);
        for (int j = 0; j < n_; ++j) {
            lb_[j] = lp_.lower[j];
            ub_[j] = lp_.upper[j];
            if (std::isfinite(lb_[j]))
                x_[j] = lb_[j];
            else if (std::isfinite(ub_[j]))
                x_[j] = ub_[j];
            else
                x_[j] = 0.0;
        }
        for (int i = 0; i < m_; ++i) {
            const int s = n_ + i;
            switch (lp_.senses[i]) {
                case RowSense::LessEqual: lb_[s] = 0.0; ub_[s] = kInf; break;
                case RowSense::GreaterEqual: lb_[s] = -kInf; ub_[s] = 0.0; break;
                case RowSense::Equal: lb_[s] = 0.0; ub_[s] = 0.0; break;
            }
            x_[s] = 0.0;
        }
        // Residuals decide the artificial column signs; artificials form the
        // starting basis.
        Eigen::VectorXd xs(n_);
        for (int j = 0; j < n_; ++j) xs[j] = x_[j];
        Eigen::VectorXd r = lp_.rhs - lp_.constraints * xs;
        basis_.resize(m_);
        in_basis_.assign(total_, -1);
        xB_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            const int a = n_ + m_ + i;
            art_sign_[i] = (r[i] >= 0.0) ? 1.0 : -1.0;
            lb_[a] = 0.0;
            ub_[a] = kInf;
            basis_[i] = a;
            in_basis_[a] = i;
            xB_[i] = std::abs(r[i]);
        }
        Binv_ = Eigen::MatrixXd::Zero(m_, m_);
        for (int i = 0; i < m_; ++i) Binv_(i, i) = art_sign_[i];
        cols_.resize(n_);
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < m_; ++i)
                if (lp_.constraints(i, j) != 0.0)
                    cols_[j].emplace_back(i, lp_.constraints(i, j));
        if (opts_.max_iterations <= 0)
            opts_.max_iterations = 2000 + 200 * (m_ + n_);
    }

    double cost(int j) const {
        if (phase_ == 1) return j >= n_ + m_ ? 1.0 : 0.0;
        return j < n_ ? lp_.objective[j] : 0.0;
    }

    double phase1_objective() const {
        double s = 0.0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= n_ + m_) s += xB_[i];
        for (int j = n_ + m_; j < total_; ++j)
            if (in_basis_[j] < 0) s += x_[j];
        return s;
    }

    // Column j of the extended matrix into `out`.
    void column(int j, Eigen::VectorXd& out) const {
        out.setZero(m_);
        if (j < n_) {
            for (const auto& [i, v] : cols_[j]) out[i] = v;
        } else if (j < n_ + m_) {
            out[j - n_] = 1.0;
        } else {
            out[j - n_ - m_] = art_sign_[j - n_ - m_];
        }
    }

    // w = Binv * (column j), accumulating only the column's nonzeros.
    void ftran(int j, Eigen::VectorXd& w) const {
        if (j < n_) {
            w.setZero(m_);
            for (const auto& [i, v] : cols_[j]) w.noalias() += v * Binv_.col(i);
        } else if (j < n_ + m_) {
            w = Binv_.col(j - n_);
        } else {
            w = art_sign_[j - n_ - m_] * Binv_.col(j - n_ - m_);
        }
    }

    Eigen::VectorXd dual_vector() const {
        Eigen::VectorXd cB(m_);
        for (int i = 0; i < m_; ++i) cB[i] = cost(basis_[i]);
        return Binv_.transpose() * cB;
    }

    void refactorize() {
        Eigen::MatrixXd B(m_, m_);
        Eigen::VectorXd col(m_);
        for (int i = 0; i < m_; ++i) {
            column(basis_[i], col);
            B.col(i) = col;
        }
        Binv_ = B.partialPivLu().inverse();
        // Recompute basic values from nonbasic ones.
        Eigen::VectorXd nb = lp_.rhs;
        for (int j = 0; j < n_; ++j)
            if (in_basis_[j] < 0 && x_[j] != 0.0)
                for (const auto& [i, v] : cols_[j]) nb[i] -= v * x_[j];
        for (int i = 0; i < m_; ++i) {
            const int s = n_ + i;
            if (in_basis_[s] < 0 && x_[s] != 0.0) nb[i] -= x_[s];
            const int a = n_ + m_ + i;
            if (in_basis_[a] < 0 && x_[a] != 0.0) nb[i] -= art_sign_[i] * x_[a];
        }
        xB_ = Binv_ * nb;
        pivots_since_refactor_ = 0;
    }

    LpStatus optimize() {
        Eigen::VectorXd w(m_);
        while (true) {
            if (iterations_ >= opts_.max_iterations)
                throw NonConvergence("simplex: iteration limit " +
                                     std::to_string(opts_.max_iterations) +
                                     " exceeded");
            ++iterations_;

            const Eigen::VectorXd y = dual_vector();

            const bool bland = degenerate_streak_ > 40;
            int enter = -1;
            double best = opts_.opt_tol;
            int dir = 0;  // +1 increase from lower, -1 decrease from upper
            const int scan_end = (phase_ == 1) ? total_ : n_ + m_;
            for (int j = 0; j < scan_end; ++j) {
                if (in_basis_[j] >= 0) continue;
                if (ub_[j] - lb_[j] <= 1e-11) continue;  // fixed (or as good as)
                double dj;
                if (j < n_) {
                    dj = (phase_ == 2) ? lp_.objective[j] : 0.0;
                    for (const auto& [i, v] : cols_[j]) dj -= v * y[i];
                } else if (j < n_ + m_)
                    dj = cost(j) - y[j - n_];
                else
                    dj = cost(j) - art_sign_[j - n_ - m_] * y[j - n_ - m_];
                const bool at_lower = std::isfinite(lb_[j]) && x_[j] <= lb_[j] + 1e-12;
                const bool at_upper = std::isfinite(ub_[j]) && x_[j] >= ub_[j] - 1e-12;
                int cand_dir = 0;
                double score = 0.0;
                if (dj < -opts_.opt_tol && (at_lower || (!at_lower && !at_upper))) {
                    cand_dir = +1;
                    score = -dj;
                } else if (dj > opts_.opt_tol && (at_upper || (!at_lower && !at_upper))) {
                    cand_dir = -1;
                    score = dj;
                }
                if (cand_dir == 0) continue;
                if (bland) { enter = j; dir = cand_dir; break; }
                if (score > best) { best = score; enter = j; dir = cand_dir; }
            }
            if (enter < 0) return LpStatus::Optimal;
#ifdef IEH_LP_DEBUG
            if (iterations_ % 100 == 0) {
                double ob = 0;
                for (int i = 0; i < m_; ++i) ob += cost(basis_[i]) * xB_[i];
                for (int j = 0; j < total_; ++j)
                    if (in_basis_[j] < 0) ob += cost(j) * x_[j];
                fprintf(stderr, "it %d ph %d obj %.9g enter %d dir %d best %.3g streak %d\n",
                        iterations_, phase_, ob, enter, dir, best, degenerate_streak_);
            }
#endif

            ftran(enter, w);
            // Entering moves by theta >= 0 in direction `dir`; basics move by
            // -dir*theta*w.
            double theta = kInf;
            int leave_row = -1;
            double bound_flip = kInf;
            if (std::isfinite(lb_[enter]) && std::isfinite(ub_[enter]))
                bound_flip = ub_[enter] - lb_[enter];
            for (int i = 0; i < m_; ++i) {
                const double wi = dir * w[i];
                const int bj = basis_[i];
                if (wi > 1e-11) {
                    if (std::isfinite(lb_[bj])) {
                        const double t = (xB_[i] - lb_[bj]) / wi;
                        if (t < theta - 1e-12 || (t < theta + 1e-12 &&
                                                  (leave_row < 0 || bj < basis_[leave_row]))) {
                            theta = std::max(t, 0.0);
                            leave_row = i;
                        }
                    }
                } else if (wi < -1e-11) {
                    if (std::isfinite(ub_[bj])) {
                        const double t = (ub_[bj] - xB_[i]) / (-wi);
                        if (t < theta - 1e-12 || (t < theta + 1e-12 &&
                                                  (leave_row < 0 || bj < basis_[leave_row]))) {
                            theta = std::max(t, 0.0);
                            leave_row = i;
                        }
                    }
                }
            }
#ifdef IEH_LP_DEBUG
            if (iterations_ < 30)
                fprintf(stderr, "  it %d enter %d dir %d theta %.6g flip %.6g leave %d\n",
                        iterations_, enter, dir, theta, bound_flip,
                        leave_row >= 0 ? basis_[leave_row] : -1);
#endif
            if (bound_flip < theta) {
                // Entering variable flips to its opposite bound; basis unchanged.
                x_[enter] = (dir > 0) ? ub_[enter] : lb_[enter];
                xB_ -= dir * bound_flip * w;
                degenerate_streak_ = (bound_flip < 1e-10) ? degenerate_streak_ + 1 : 0;
                continue;
            }
            if (!std::isfinite(theta)) return LpStatus::Unbounded;

            degenerate_streak_ = (theta < 1e-10) ? degenerate_streak_ + 1 : 0;

            const int leave = basis_[leave_row];
            // Leaving variable lands on the bound it ran into.
            const double wl = dir * w[leave_row];
            const double leave_val = (wl > 0.0) ? lb_[leave] : ub_[leave];

            xB_ -= dir * theta * w;
            const double enter_val = x_[enter] + dir * theta;

            in_basis_[leave] = -1;
            x_[leave] = leave_val;
            basis_[leave_row] = enter;
            in_basis_[enter] = leave_row;
            xB_[leave_row] = enter_val;

            // Product-form update of Binv_.
            const double piv = w[leave_row];
            Eigen::RowVectorXd prow = Binv_.row(leave_row) / piv;
            Eigen::VectorXd u = w;
            u[leave_row] = 0.0;
            Binv_.noalias() -= u * prow;
            Binv_.row(leave_row) = prow;

            if (++pivots_since_refactor_ >= 300) refactorize();
        }
    }
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolverOptions& opts) {
    Simplex s(lp, opts);
    return s.run();
}

void dump_tableau(const LinearProgram& lp, std::ostream& os) {
    lp.validate();
    os << "vars " << lp.num_vars() << " rows " << lp.num_rows() << "\n";
    os << "min";
    for (int j = 0; j < lp.num_vars(); ++j) os << ' ' << lp.objective[j];
    os << "\n";
    for (int i = 0; i < lp.num_rows(); ++i) {
        for (int j = 0; j < lp.num_vars(); ++j) os << lp.constraints(i, j) << ' ';
        switch (lp.senses[i]) {
            case RowSense::LessEqual: os << "<="; break;
            case RowSense::Equal: os << "=="; break;
            case RowSense::GreaterEqual: os << ">="; break;
        }
        os << ' ' << lp.rhs[i] << "\n";
    }
    for (int j = 0; j < lp.num_vars(); ++j)
        os << "bound " << j << " [" << lp.lower[j] << ", " << lp.upper[j] << "]\n";
}

}  // namespace ieh
