#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <vector>

#include "ieh/errors.hpp"

namespace ieh {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, Equal, GreaterEqual };

// Dense LP in the form
//   min  objective . x
//   s.t. constraints * x  (sense)  rhs
//        lower <= x <= upper        (+/-inf sentinels allowed)
struct LinearProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd constraints;  // rows x vars
    std::vector<RowSense> senses;
    Eigen::VectorXd rhs;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    int num_vars() const { return static_cast<int>(objective.size()); }
    int num_rows() const { return static_cast<int>(rhs.size()); }

    // Throws StructuralError on dimension mismatch or lower > upper.
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Eigen::VectorXd primal;
    // duals[i] = d(objective)/d(rhs[i]) at the optimum.
    Eigen::VectorXd duals;
    double objective = 0.0;
    int iterations = 0;
};

struct SolverOptions {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;  // reduced-cost tolerance
    int max_iterations = 0;  // 0 = choose from problem size
};

// Bounded-variable revised simplex, two-phase, dense. Deterministic:
// Dantzig pricing with lowest-index tie-breaking, Bland's rule after a
// degenerate-pivot streak. Throws NonConvergence at the iteration limit.
LpSolution solve(const LinearProgram& lp, const SolverOptions& opts = {});

struct Violation {
    enum class Kind { Row, LowerBound, UpperBound };
    Kind kind;
    int index;
    double amount;  // positive magnitude of the violation
};

struct FeasibilityReport {
    std::vector<Violation> violations;
    bool feasible() const { return violations.empty(); }
    double max_violation() const;
};

// Lists every violated row/bound of `point` with signed magnitudes.
// Throws StructuralError if point length != variable count.
FeasibilityReport check_feasible(const LinearProgram& lp,
                                 const Eigen::VectorXd& point, double tol);

// Plain-text tableau dump for debugging (CLI --dump-lp).
void dump_tableau(const LinearProgram& lp, std::ostream& os);

}  // namespace ieh
