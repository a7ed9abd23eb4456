#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ieh/lp.hpp"
#include "lp_oracle.hpp"
#include "random_lp.hpp"

using namespace ieh;
using ieh::testing::random_boxed_lp;
using ieh::testing::vertex_enumeration_oracle;

namespace {

LinearProgram single_var_lp() {
    LinearProgram lp;
    lp.objective = Eigen::VectorXd::Constant(1, 1.0);
    lp.constraints = Eigen::MatrixXd::Constant(1, 1, 1.0);
    lp.senses = {RowSense::GreaterEqual};
    lp.rhs = Eigen::VectorXd::Constant(1, 1.0);
    lp.lower = Eigen::VectorXd::Constant(1, 0.0);
    lp.upper = Eigen::VectorXd::Constant(1, 10.0);
    return lp;
}

// Dual objective for the bounded form; valid lower bound on the primal.
double dual_objective(const LinearProgram& lp, const LpSolution& sol) {
    double obj = sol.duals.dot(lp.rhs);
    const Eigen::VectorXd d = lp.objective - lp.constraints.transpose() * sol.duals;
    for (int j = 0; j < lp.num_vars(); ++j) {
        if (d[j] > 0 && std::isfinite(lp.lower[j]))
            obj += d[j] * lp.lower[j];
        else if (d[j] < 0 && std::isfinite(lp.upper[j]))
            obj += d[j] * lp.upper[j];
    }
    return obj;
}

}  // namespace

TEST_CASE("minimize x subject to x >= 1") {
    const auto sol = solve(single_var_lp());
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.duals[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("degenerate objective, equality pin") {
    LinearProgram lp = single_var_lp();
    lp.objective[0] = 0.0;
    lp.senses = {RowSense::Equal};
    lp.rhs[0] = 5.0;
    const auto sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.primal[0] == doctest::Approx(5.0));
    CHECK(sol.objective == doctest::Approx(0.0));
}

TEST_CASE("infeasible and unbounded are reported, not mangled") {
    LinearProgram lp = single_var_lp();
    lp.rhs[0] = 20.0;  // x >= 20 with x <= 10
    CHECK(solve(lp).status == LpStatus::Infeasible);

    LinearProgram ub = single_var_lp();
    ub.objective[0] = -1.0;
    ub.upper[0] = kInf;
    CHECK(solve(ub).status == LpStatus::Unbounded);
}

TEST_CASE("dimension mismatch is a structural error, not Infeasible") {
    LinearProgram lp = single_var_lp();
    lp.rhs.resize(2);
    CHECK_THROWS_AS(solve(lp), StructuralError);
}

TEST_CASE("iteration limit raises NonConvergence") {
    LinearProgram lp = random_boxed_lp(7);
    SolverOptions opts;
    opts.max_iterations = 1;
    CHECK_THROWS_AS(solve(lp, opts), NonConvergence);
}

TEST_CASE("random LPs match vertex-enumeration oracle") {
    for (int k = 0; k < 200; ++k) {
        const LinearProgram lp = random_boxed_lp(1000 + k);
        const auto sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        const auto oracle = vertex_enumeration_oracle(lp);
        REQUIRE(oracle.feasible);
        CHECK(std::abs(sol.objective - oracle.objective) < 1e-6);
        CHECK(check_feasible(lp, sol.primal, 1e-7).feasible());
    }
}

TEST_CASE("weak duality and complementary slackness") {
    for (int k = 0; k < 100; ++k) {
        const LinearProgram lp = random_boxed_lp(5000 + k);
        const auto sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(dual_objective(lp, sol) <= sol.objective + 1e-6);
        const Eigen::VectorXd ax = lp.constraints * sol.primal;
        for (int i = 0; i < lp.num_rows(); ++i) {
            if (lp.senses[i] == RowSense::Equal) continue;
            const double scale = std::max(1.0, std::abs(lp.rhs[i]));
            const double slack = std::abs(ax[i] - lp.rhs[i]);
            CHECK(std::abs(sol.duals[i]) * slack / scale <= 1e-6);
        }
    }
}

TEST_CASE("determinism: identical inputs give bit-identical solutions") {
    const LinearProgram lp = random_boxed_lp(99, 5, 8);
    const auto a = solve(lp);
    const auto b = solve(lp);
    REQUIRE(a.status == LpStatus::Optimal);
    CHECK(a.objective == b.objective);
    for (int j = 0; j < lp.num_vars(); ++j) CHECK(a.primal[j] == b.primal[j]);
    for (int i = 0; i < lp.num_rows(); ++i) CHECK(a.duals[i] == b.duals[i]);
}

TEST_CASE("check_feasible reports signed violations") {
    const LinearProgram lp = single_var_lp();
    Eigen::VectorXd ok(1), bad(1);
    ok << 1.0;
    bad << 0.5;
    CHECK(check_feasible(lp, ok, 1e-9).feasible());
    const auto rep = check_feasible(lp, bad, 1e-9);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].index == 0);
    CHECK(rep.violations[0].amount == doctest::Approx(0.5));
    Eigen::VectorXd wrong_len(2);
    wrong_len << 1.0, 1.0;
    CHECK_THROWS_AS(check_feasible(lp, wrong_len, 1e-9), StructuralError);
}

TEST_CASE("tableau dump mentions dimensions") {
    std::ostringstream os;
    dump_tableau(single_var_lp(), os);
    CHECK(os.str().find("vars 1 rows 1") != std::string::npos);
}
