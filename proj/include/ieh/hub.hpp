#pragma once

#include <Eigen/Dense>
#include <string>

#include "ieh/lp.hpp"

namespace ieh {

// Local electricity price per remaining period, the transactive signal.
struct PriceVector {
    Eigen::VectorXd lambda_e;
    double lambda_min = 0.0;
    double lambda_max = 1.5;

    int size() const { return static_cast<int>(lambda_e.size()); }
    void clamp_into_bounds() {
        lambda_e = lambda_e.cwiseMax(lambda_min).cwiseMin(lambda_max);
    }
};

// All efficiencies, device limits, storage parameters, and shiftable-load
// totals for one energy hub.
struct HubConfig {
    std::string name;
    double eta_ee = 1.0;
    double eta_ge_chp = 0.35;
    double eta_gth_chp = 0.45;
    double eta_gth_gf = 0.9;
    double eta_ch_ees = 0.95, eta_dch_ees = 0.95;
    double eta_ch_tes = 0.95, eta_dch_tes = 0.95;
    double ees_capacity = 0.0, tes_capacity = 0.0;  // kWh
    double ees_soc_min = 0.1, ees_soc_max = 0.9;
    double tes_soc_min = 0.1, tes_soc_max = 0.9;
    double ees_soc_init = 0.5, tes_soc_init = 0.5;
    double p_ch_max = 0.0, p_dch_max = 0.0;    // kW
    double h_ch_max = 0.0, h_dch_max = 0.0;    // kW-th
    double g_chp_max = 0.0, g_gf_max = 0.0;    // kW-gas
    double p_import_max = 0.0;                 // |p_e| limit, kW
    double l_e_sl_total = 0.0, l_th_sl_total = 0.0;  // kWh over the window
    double sl_rate_mult = 3.0;  // per-period cap = mult * remaining/periods

    void validate() const;
};

// Per-period exogenous series over the full horizon.
struct ExogenousSeries {
    Eigen::VectorXd p_res;  // kW
    Eigen::VectorXd l_e;    // kW
    Eigen::VectorXd l_th;   // kW-th
    Eigen::VectorXd mu_e;   // currency/kWh
    Eigen::VectorXd mu_g;   // currency/kWh-gas

    int size() const { return static_cast<int>(p_res.size()); }
    void validate() const;
    ExogenousSeries slice(int first, int count) const;
};

// Volumetric gas price -> currency per kWh-gas.
double gas_price_per_kwh(double price_per_m3, double density_kg_per_m3,
                         double calorific_mj_per_kg);

// Carried state between rolling-horizon periods.
struct HubState {
    double soc_ees = 0.0;  // kWh
    double soc_tes = 0.0;
    double l_e_sl_remaining = 0.0;   // kWh
    double l_th_sl_remaining = 0.0;
};

HubState initial_state(const HubConfig& cfg);

// One hub's decision variables over the remaining periods.
struct Schedule {
    Eigen::VectorXd p_e;        // kW, negative = selling
    Eigen::VectorXd g_chp, g_gf;
    Eigen::VectorXd p_ch_ees, p_dch_ees;
    Eigen::VectorXd h_ch_tes, h_dch_tes;
    Eigen::VectorXd p_curt, h_curt;
    Eigen::VectorXd l_e_sl, l_th_sl;
    Eigen::VectorXd soc_ees, soc_tes;  // end-of-period, kWh

    int size() const { return static_cast<int>(p_e.size()); }
};

// Variable/row layout of a compiled hub problem. Variables are period-major
// with a fixed stride; rows are period-major followed by the two
// shiftable-total rows.
struct HubLpMap {
    enum Var {
        kPe = 0, kGchp, kGgf, kPch, kPdch, kHch, kHdch,
        kPcurt, kHcurt, kLeSl, kLthSl, kSocE, kSocT,
        kVarsPerPeriod
    };
    enum Row { kEBal = 0, kThBal, kSocEDyn, kSocTDyn, kRowsPerPeriod };

    int horizon = 0;
    double dt = 1.0;

    int var(Var v, int t) const { return t * kVarsPerPeriod + v; }
    int row(Row r, int t) const { return t * kRowsPerPeriod + r; }
    int row_sl_e() const { return horizon * kRowsPerPeriod; }
    int row_sl_th() const { return horizon * kRowsPerPeriod + 1; }
    int num_vars() const { return horizon * kVarsPerPeriod; }
    int num_rows() const { return horizon * kRowsPerPeriod + 2; }
};

struct HubProblem {
    LinearProgram lp;
    HubLpMap map;
};

// Compiles the relaxed autonomous problem over exo[t_c..] into an LP:
// objective sum_t dt*(lambda_t*p_e + mu_g*(g_chp+g_gf)), both balance rows,
// SOC dynamics/bounds with terminal soc >= soc_init, shiftable totals, device
// bounds. The charge*discharge complementarity is deliberately absent.
HubProblem build_autonomous_lp(const HubConfig& cfg, const ExogenousSeries& exo,
                               const PriceVector& prices, int t_c,
                               const HubState& state, double dt = 1.0);

Schedule decode_schedule(const LpSolution& sol, const HubLpMap& map);

struct CostBreakdown {
    Eigen::VectorXd per_period;
    double total = 0.0;
};

// F_t = dt*(lambda_t*p_e + mu_g_t*(g_chp+g_gf)); exo must be the remaining
// slice aligned with the schedule and prices.
CostBreakdown evaluate_cost(const Schedule& sched, const ExogenousSeries& exo,
                            const PriceVector& prices, double dt = 1.0);

// Max absolute electric/thermal balance residual of a schedule against the
// remaining exogenous slice.
double balance_residual(const Schedule& sched, const HubConfig& cfg,
                        const ExogenousSeries& exo);

}  // namespace ieh
