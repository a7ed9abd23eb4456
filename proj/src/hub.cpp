#include "ieh/hub.hpp"

#include <cmath>

namespace ieh {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw StructuralError(msg);
}

void check_eff(double v, const char* what, const std::string& hub) {
    if (!(v > 0.0 && v <= 1.0))
        throw StructuralError("hub '" + hub + "': " + what +
                              " must be in (0, 1], got " + std::to_string(v));
}

}  // namespace

void HubConfig::validate() const {
    check_eff(eta_ee, "eta_ee", name);
    check_eff(eta_ge_chp, "eta_ge_chp", name);
    check_eff(eta_gth_chp, "eta_gth_chp", name);
    check_eff(eta_gth_gf, "eta_gth_gf", name);
    check_eff(eta_ch_ees, "eta_ch_ees", name);
    check_eff(eta_dch_ees, "eta_dch_ees", name);
    check_eff(eta_ch_tes, "eta_ch_tes", name);
    check_eff(eta_dch_tes, "eta_dch_tes", name);
    require(ees_soc_min <= ees_soc_init && ees_soc_init <= ees_soc_max,
            "hub '" + name + "': EES soc_min <= soc_init <= soc_max violated");
    require(tes_soc_min <= tes_soc_init && tes_soc_init <= tes_soc_max,
            "hub '" + name + "': TES soc_min <= soc_init <= soc_max violated");
    for (double v : {ees_capacity, tes_capacity, p_ch_max, p_dch_max, h_ch_max,
                     h_dch_max, g_chp_max, g_gf_max, p_import_max, l_e_sl_total,
                     l_th_sl_total})
        require(v >= 0.0, "hub '" + name + "': capacities and limits must be >= 0");
    require(sl_rate_mult >= 1.0,
            "hub '" + name + "': sl_rate_mult must be >= 1");
}

void ExogenousSeries::validate() const {
    const auto n = p_res.size();
    require(l_e.size() == n && l_th.size() == n && mu_e.size() == n &&
                mu_g.size() == n,
            "ExogenousSeries: column lengths differ");
    for (Eigen::Index t = 0; t < n; ++t) {
        require(p_res[t] >= 0 && l_e[t] >= 0 && l_th[t] >= 0,
                "ExogenousSeries: negative RES/load at period " + std::to_string(t));
        require(mu_g[t] > 0,
                "ExogenousSeries: gas price must be positive at period " +
                    std::to_string(t));
    }
}

ExogenousSeries ExogenousSeries::slice(int first, int count) const {
    require(first >= 0 && count >= 0 && first + count <= size(),
            "ExogenousSeries::slice out of range");
    ExogenousSeries s;
    s.p_res = p_res.segment(first, count);
    s.l_e = l_e.segment(first, count);
    s.l_th = l_th.segment(first, count);
    s.mu_e = mu_e.segment(first, count);
    s.mu_g = mu_g.segment(first, count);
    return s;
}

double gas_price_per_kwh(double price_per_m3, double density_kg_per_m3,
                         double calorific_mj_per_kg) {
    require(price_per_m3 > 0 && density_kg_per_m3 > 0 && calorific_mj_per_kg > 0,
            "gas_price_per_kwh: all arguments must be positive");
    const double mj_per_m3 = density_kg_per_m3 * calorific_mj_per_kg;
    const double kwh_per_m3 = mj_per_m3 / 3.6;
    return price_per_m3 / kwh_per_m3;
}

HubState initial_state(const HubConfig& cfg) {
    HubState s;
    s.soc_ees = cfg.ees_soc_init * cfg.ees_capacity;
    s.soc_tes = cfg.tes_soc_init * cfg.tes_capacity;
    s.l_e_sl_remaining = cfg.l_e_sl_total;
    s.l_th_sl_remaining = cfg.l_th_sl_total;
    return s;
}

HubProblem build_autonomous_lp(const HubConfig& cfg, const ExogenousSeries& exo,
                               const PriceVector& prices, int t_c,
                               const HubState& state, double dt) {
    cfg.validate();
    exo.validate();
    const int horizon = exo.size() - t_c;
    if (horizon <= 0)
        throw StructuralError("build_autonomous_lp: empty horizon (t_c=" +
                              std::to_string(t_c) + ", periods=" +
                              std::to_string(exo.size()) + ")");
    if (prices.size() != horizon)
        throw StructuralError("build_autonomous_lp: prices cover " +
                              std::to_string(prices.size()) + " periods, need " +
                              std::to_string(horizon));

    HubProblem prob;
    auto& map = prob.map;
    map.horizon = horizon;
    map.dt = dt;
    const int n = map.num_vars();
    const int m = map.num_rows();

    auto& lp = prob.lp;
    lp.objective = Eigen::VectorXd::Zero(n);
    lp.constraints = Eigen::MatrixXd::Zero(m, n);
    lp.senses.assign(m, RowSense::Equal);
    lp.rhs = Eigen::VectorXd::Zero(m);
    lp.lower = Eigen::VectorXd::Zero(n);
    lp.upper = Eigen::VectorXd::Zero(n);

    const double ees_lo = cfg.ees_soc_min * cfg.ees_capacity;
    const double ees_hi = cfg.ees_soc_max * cfg.ees_capacity;
    const double tes_lo = cfg.tes_soc_min * cfg.tes_capacity;
    const double tes_hi = cfg.tes_soc_max * cfg.tes_capacity;
    const double sl_e_cap =
        cfg.l_e_sl_total > 0 ? cfg.sl_rate_mult * state.l_e_sl_remaining / horizon
                             : 0.0;
    const double sl_th_cap =
        cfg.l_th_sl_total > 0
            ? cfg.sl_rate_mult * state.l_th_sl_remaining / horizon
            : 0.0;

    using M = HubLpMap;
    for (int t = 0; t < horizon; ++t) {
        const int g = t_c + t;  // index into the full series

        lp.objective[map.var(M::kPe, t)] = dt * prices.lambda_e[t];
        lp.objective[map.var(M::kGchp, t)] = dt * exo.mu_g[g];
        lp.objective[map.var(M::kGgf, t)] = dt * exo.mu_g[g];

        auto bound = [&](M::Var v, double lo, double hi) {
            lp.lower[map.var(v, t)] = lo;
            lp.upper[map.var(v, t)] = hi;
        };
        bound(M::kPe, -cfg.p_import_max, cfg.p_import_max);
        bound(M::kGchp, 0.0, cfg.g_chp_max);
        bound(M::kGgf, 0.0, cfg.g_gf_max);
        bound(M::kPch, 0.0, cfg.p_ch_max);
        bound(M::kPdch, 0.0, cfg.p_dch_max);
        bound(M::kHch, 0.0, cfg.h_ch_max);
        bound(M::kHdch, 0.0, cfg.h_dch_max);
        bound(M::kPcurt, 0.0, exo.p_res[g]);
        bound(M::kHcurt, 0.0, kInf);
        bound(M::kLeSl, 0.0, sl_e_cap);
        bound(M::kLthSl, 0.0, sl_th_cap);
        bound(M::kSocE, ees_lo, ees_hi);
        bound(M::kSocT, tes_lo, tes_hi);
        if (t == horizon - 1) {
            // Terminal condition: no end-of-horizon storage dumping.
            lp.lower[map.var(M::kSocE, t)] =
                std::max(ees_lo, cfg.ees_soc_init * cfg.ees_capacity);
            lp.lower[map.var(M::kSocT, t)] =
                std::max(tes_lo, cfg.tes_soc_init * cfg.tes_capacity);
        }

        // Electric balance.
        {
            const int r = map.row(M::kEBal, t);
            lp.constraints(r, map.var(M::kPe, t)) = cfg.eta_ee;
            lp.constraints(r, map.var(M::kGchp, t)) = cfg.eta_ge_chp;
            lp.constraints(r, map.var(M::kPdch, t)) = 1.0;
            lp.constraints(r, map.var(M::kPch, t)) = -1.0;
            lp.constraints(r, map.var(M::kPcurt, t)) = -1.0;
            lp.constraints(r, map.var(M::kLeSl, t)) = -1.0;
            lp.rhs[r] = exo.l_e[g] - exo.p_res[g];
        }
        // Thermal balance.
        {
            const int r = map.row(M::kThBal, t);
            lp.constraints(r, map.var(M::kGchp, t)) = cfg.eta_gth_chp;
            lp.constraints(r, map.var(M::kGgf, t)) = cfg.eta_gth_gf;
            lp.constraints(r, map.var(M::kHdch, t)) = 1.0;
            lp.constraints(r, map.var(M::kHch, t)) = -1.0;
            lp.constraints(r, map.var(M::kHcurt, t)) = -1.0;
            lp.constraints(r, map.var(M::kLthSl, t)) = -1.0;
            lp.rhs[r] = exo.l_th[g];
        }
        // SOC dynamics: soc_t - soc_{t-1} = dt*(eta_ch*ch - dch/eta_dch).
        {
            const int r = map.row(M::kSocEDyn, t);
            lp.constraints(r, map.var(M::kSocE, t)) = 1.0;
            lp.constraints(r, map.var(M::kPch, t)) = -dt * cfg.eta_ch_ees;
            lp.constraints(r, map.var(M::kPdch, t)) = dt / cfg.eta_dch_ees;
            if (t > 0)
                lp.constraints(r, map.var(M::kSocE, t - 1)) = -1.0;
            else
                lp.rhs[r] = state.soc_ees;
        }
        {
            const int r = map.row(M::kSocTDyn, t);
            lp.constraints(r, map.var(M::kSocT, t)) = 1.0;
            lp.constraints(r, map.var(M::kHch, t)) = -dt * cfg.eta_ch_tes;
            lp.constraints(r, map.var(M::kHdch, t)) = dt / cfg.eta_dch_tes;
            if (t > 0)
                lp.constraints(r, map.var(M::kSocT, t - 1)) = -1.0;
            else
                lp.rhs[r] = state.soc_tes;
        }
        lp.constraints(map.row_sl_e(), map.var(M::kLeSl, t)) = dt;
        lp.constraints(map.row_sl_th(), map.var(M::kLthSl, t)) = dt;
    }
    lp.rhs[map.row_sl_e()] = state.l_e_sl_remaining;
    lp.rhs[map.row_sl_th()] = state.l_th_sl_remaining;
    return prob;
}

Schedule decode_schedule(const LpSolution& sol, const HubLpMap& map) {
    if (sol.status != LpStatus::Optimal)
        throw StructuralError(std::string("decode_schedule: solution status is ") +
                              to_string(sol.status));
    if (sol.primal.size() != map.num_vars())
        throw StructuralError("decode_schedule: solution size mismatch");
    using M = HubLpMap;
    Schedule s;
    const int T = map.horizon;
    auto col = [&](M::Var v) {
        Eigen::VectorXd out(T);
        for (int t = 0; t < T; ++t) out[t] = sol.primal[map.var(v, t)];
        return out;
    };
    s.p_e = col(M::kPe);
    s.g_chp = col(M::kGchp);
    s.g_gf = col(M::kGgf);
    s.p_ch_ees = col(M::kPch);
    s.p_dch_ees = col(M::kPdch);
    s.h_ch_tes = col(M::kHch);
    s.h_dch_tes = col(M::kHdch);
    s.p_curt = col(M::kPcurt);
    s.h_curt = col(M::kHcurt);
    s.l_e_sl = col(M::kLeSl);
    s.l_th_sl = col(M::kLthSl);
    s.soc_ees = col(M::kSocE);
    s.soc_tes = col(M::kSocT);
    return s;
}

CostBreakdown evaluate_cost(const Schedule& sched, const ExogenousSeries& exo,
                            const PriceVector& prices, double dt) {
    const int T = sched.size();
    if (exo.size() != T || prices.size() != T)
        throw StructuralError("evaluate_cost: length mismatch (schedule " +
                              std::to_string(T) + ", exo " +
                              std::to_string(exo.size()) + ", prices " +
                              std::to_string(prices.size()) + ")");
    CostBreakdown c;
    c.per_period.resize(T);
    for (int t = 0; t < T; ++t) {
        c.per_period[t] = dt * (prices.lambda_e[t] * sched.p_e[t] +
                                exo.mu_g[t] * (sched.g_chp[t] + sched.g_gf[t]));
        c.total += c.per_period[t];
    }
    return c;
}

double balance_residual(const Schedule& sched, const HubConfig& cfg,
                        const ExogenousSeries& exo) {
    const int T = sched.size();
    if (exo.size() != T)
        throw StructuralError("balance_residual: length mismatch");
    double worst = 0.0;
    for (int t = 0; t < T; ++t) {
        const double e = cfg.eta_ee * sched.p_e[t] +
                         cfg.eta_ge_chp * sched.g_chp[t] + sched.p_dch_ees[t] -
                         sched.p_ch_ees[t] + exo.p_res[t] - sched.p_curt[t] -
                         sched.l_e_sl[t] - exo.l_e[t];
        const double h = cfg.eta_gth_chp * sched.g_chp[t] +
                         cfg.eta_gth_gf * sched.g_gf[t] + sched.h_dch_tes[t] -
                         sched.h_ch_tes[t] - sched.h_curt[t] - sched.l_th_sl[t] -
                         exo.l_th[t];
        worst = std::max(worst, std::max(std::abs(e), std::abs(h)));
    }
    return worst;
}

}  // namespace ieh
