#include "ieh/oracle.hpp"

#include <cmath>
#include <string>

namespace ieh {

namespace {

struct Assembly {
    LinearProgram lp;
    std::vector<HubLpMap> maps;
    int var_off(int hub) const { return hub * vars_per_hub; }
    int row_off(int hub) const { return hub * rows_per_hub; }
    int p_tr_var(int t) const { return n_hubs * vars_per_hub + t; }
    int coupling_row(int t) const { return n_hubs * rows_per_hub + t; }
    int n_hubs = 0, vars_per_hub = 0, rows_per_hub = 0, horizon = 0;
};

Assembly assemble(const std::vector<HubAgent>& fleet,
                  const Eigen::VectorXd& mu_e, const TransformerConfig& tr,
                  int t_c, double p_tr_lo, double p_tr_hi) {
    const int T = static_cast<int>(mu_e.size());
    const int H = T - t_c;
    Assembly a;
    a.n_hubs = static_cast<int>(fleet.size());
    a.horizon = H;

    PriceVector utility;
    utility.lambda_e = mu_e.tail(H);
    utility.lambda_min = -kInf;
    utility.lambda_max = kInf;

    std::vector<HubProblem> blocks;
    blocks.reserve(fleet.size());
    for (const auto& hub : fleet) {
        if (hub.forecast.size() != T)
            throw StructuralError("solve_centralized: hub '" + hub.id +
                                  "' horizon mismatch");
        blocks.push_back(
            build_autonomous_lp(hub.cfg, hub.forecast, utility, t_c, hub.state));
        a.maps.push_back(blocks.back().map);
    }
    a.vars_per_hub = blocks.empty() ? 0 : blocks.front().map.num_vars();
    a.rows_per_hub = blocks.empty() ? 0 : blocks.front().map.num_rows();

    const int nv = a.n_hubs * a.vars_per_hub + H;
    const int nr = a.n_hubs * a.rows_per_hub + H;
    LinearProgram& lp = a.lp;
    lp.objective = Eigen::VectorXd::Zero(nv);
    lp.constraints = Eigen::MatrixXd::Zero(nr, nv);
    lp.senses.assign(nr, RowSense::Equal);
    lp.rhs = Eigen::VectorXd::Zero(nr);
    lp.lower = Eigen::VectorXd::Zero(nv);
    lp.upper = Eigen::VectorXd::Zero(nv);

    for (int n = 0; n < a.n_hubs; ++n) {
        const auto& b = blocks[n].lp;
        const int vo = a.var_off(n), ro = a.row_off(n);
        lp.objective.segment(vo, a.vars_per_hub) = b.objective;
        lp.lower.segment(vo, a.vars_per_hub) = b.lower;
        lp.upper.segment(vo, a.vars_per_hub) = b.upper;
        lp.rhs.segment(ro, a.rows_per_hub) = b.rhs;
        lp.constraints.block(ro, vo, a.rows_per_hub, a.vars_per_hub) =
            b.constraints;
        for (int r = 0; r < a.rows_per_hub; ++r)
            lp.senses[ro + r] = b.senses[r];
    }
    for (int t = 0; t < H; ++t) {
        const int pv = a.p_tr_var(t);
        lp.lower[pv] = p_tr_lo;
        lp.upper[pv] = p_tr_hi;
        const int cr = a.coupling_row(t);
        lp.constraints(cr, pv) = -1.0;
        for (int n = 0; n < a.n_hubs; ++n)
            lp.constraints(cr, a.var_off(n) + a.maps[n].var(HubLpMap::kPe, t)) =
                1.0;
    }
    (void)tr;
    return a;
}

[[noreturn]] void diagnose_infeasible(const std::vector<HubAgent>& fleet,
                                      const Eigen::VectorXd& mu_e,
                                      const TransformerConfig& tr, int t_c) {
    // Relax the exchange limits: if that restores feasibility, some period's
    // aggregate exchange cannot fit the transformer; otherwise a hub block is
    // infeasible on its own.
    Assembly relaxed = assemble(fleet, mu_e, tr, t_c, -kInf, kInf);
    const LpSolution sol = solve(relaxed.lp);
    if (sol.status == LpStatus::Optimal) {
        for (int t = 0; t < relaxed.horizon; ++t) {
            const double q = sol.primal[relaxed.p_tr_var(t)];
            if (q > tr.p_in_max + 1e-7 || q < -tr.p_out_max - 1e-7)
                throw StructuralError(
                    "solve_centralized: infeasible, period " +
                    std::to_string(t_c + t) + " needs exchange " +
                    std::to_string(q) + " kW outside [" +
                    std::to_string(-tr.p_out_max) + ", " +
                    std::to_string(tr.p_in_max) + "]");
        }
        throw StructuralError("solve_centralized: infeasible coupled problem");
    }
    const int T = static_cast<int>(mu_e.size());
    PriceVector utility;
    utility.lambda_e = mu_e.tail(T - t_c);
    utility.lambda_min = -kInf;
    utility.lambda_max = kInf;
    for (const auto& hub : fleet) {
        const auto prob =
            build_autonomous_lp(hub.cfg, hub.forecast, utility, t_c, hub.state);
        if (solve(prob.lp).status != LpStatus::Optimal)
            throw StructuralError("solve_centralized: hub '" + hub.id +
                                  "' block is infeasible standalone");
    }
    throw StructuralError("solve_centralized: infeasible coupled problem");
}

}  // namespace

CentralizedResult solve_centralized(const std::vector<HubAgent>& fleet,
                                    const Eigen::VectorXd& mu_e,
                                    const TransformerConfig& tr, int t_c) {
    tr.validate();
    const int T = static_cast<int>(mu_e.size());
    if (t_c < 0 || t_c >= T)
        throw StructuralError("solve_centralized: period out of range");
    if (fleet.empty())
        throw StructuralError("solve_centralized: empty fleet");

    Assembly a = assemble(fleet, mu_e, tr, t_c, -tr.p_out_max, tr.p_in_max);
    const LpSolution sol = solve(a.lp);
    if (sol.status == LpStatus::Infeasible)
        diagnose_infeasible(fleet, mu_e, tr, t_c);
    if (sol.status != LpStatus::Optimal)
        throw StructuralError("solve_centralized: unbounded coupled problem");

    const int H = a.horizon;
    CentralizedResult res;
    res.objective = sol.objective;
    res.iterations = sol.iterations;
    res.transformer.resize(H);
    res.lambda.resize(H);
    res.lambda_e.resize(H);
    res.capacity_dual = Eigen::VectorXd::Zero(H);
    res.dual_degenerate.assign(H, 0);

    for (int t = 0; t < H; ++t) {
        res.transformer[t] = sol.primal[a.p_tr_var(t)];
        // duals are d(objective)/d(rhs); raising the coupling rhs injects
        // free power, lowering cost, so the scarcity premium is the negative.
        res.lambda[t] = -sol.duals[a.coupling_row(t)];
        res.lambda_e[t] = mu_e[t_c + t] + res.lambda[t];
        const bool at_in = res.transformer[t] > tr.p_in_max - 1e-7;
        const bool at_out = res.transformer[t] < -tr.p_out_max + 1e-7;
        if (at_in || at_out) {
            res.capacity_dual[t] = std::abs(res.lambda[t]);
            if (std::abs(res.lambda[t]) <= 1e-9) res.dual_degenerate[t] = 1;
        }
    }

    for (size_t n = 0; n < fleet.size(); ++n) {
        LpSolution part;
        part.status = LpStatus::Optimal;
        part.primal = sol.primal.segment(a.var_off(static_cast<int>(n)),
                                         a.vars_per_hub);
        res.schedules.push_back(decode_schedule(part, a.maps[n]));
        PriceVector utility;
        utility.lambda_e = mu_e.tail(H);
        utility.lambda_min = -kInf;
        utility.lambda_max = kInf;
        res.hub_costs.push_back(
            evaluate_cost(res.schedules.back(), fleet[n].forecast.slice(t_c, H),
                          utility)
                .total);
    }
    return res;
}

}  // namespace ieh
