#pragma once

// Independent vertex-enumeration oracle for small LPs. Converts the LP to a
// pure inequality system in R^n, enumerates all n-subsets of rows, solves the
// square systems directly, and keeps the best feasible vertex. Shares no code
// with the simplex path.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "ieh/lp.hpp"

namespace ieh::testing {

struct VertexOracleResult {
    bool feasible = false;
    double objective = 0.0;
    Eigen::VectorXd point;
};

inline VertexOracleResult vertex_enumeration_oracle(const LinearProgram& lp,
                                                    double feas_tol = 1e-7) {
    const int n = lp.num_vars();
    std::vector<Eigen::RowVectorXd> rows;  // a.x <= b form
    std::vector<double> rhs;
    auto push = [&](const Eigen::RowVectorXd& a, double b) {
        rows.push_back(a);
        rhs.push_back(b);
    };
    for (int i = 0; i < lp.num_rows(); ++i) {
        Eigen::RowVectorXd a = lp.constraints.row(i);
        switch (lp.senses[i]) {
            case RowSense::LessEqual: push(a, lp.rhs[i]); break;
            case RowSense::GreaterEqual: push(-a, -lp.rhs[i]); break;
            case RowSense::Equal:
                push(a, lp.rhs[i]);
                push(-a, -lp.rhs[i]);
                break;
        }
    }
    for (int j = 0; j < n; ++j) {
        Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
        if (std::isfinite(lp.upper[j])) {
            e[j] = 1.0;
            push(e, lp.upper[j]);
        }
        if (std::isfinite(lp.lower[j])) {
            e[j] = -1.0;
            push(e, -lp.lower[j]);
            e[j] = 0.0;
        }
    }
    const int k = static_cast<int>(rows.size());
    VertexOracleResult best;

    std::vector<int> idx(n);
    auto feasible_at = [&](const Eigen::VectorXd& x) {
        for (int i = 0; i < k; ++i)
            if (rows[i].dot(x) > rhs[i] + feas_tol) return false;
        return true;
    };
    // Enumerate combinations of n active rows.
    std::vector<int> comb(n);
    for (int i = 0; i < n; ++i) comb[i] = i;
    if (k < n) return best;
    while (true) {
        Eigen::MatrixXd M(n, n);
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) {
            M.row(i) = rows[comb[i]];
            b[i] = rhs[comb[i]];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (lu.isInvertible()) {
            Eigen::VectorXd x = lu.solve(b);
            if (feasible_at(x)) {
                const double obj = lp.objective.dot(x);
                if (!best.feasible || obj < best.objective) {
                    best.feasible = true;
                    best.objective = obj;
                    best.point = x;
                }
            }
        }
        // next combination
        int i = n - 1;
        while (i >= 0 && comb[i] == k - n + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
    }
    return best;
}

}  // namespace ieh::testing
