#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ieh/equivalence.hpp"
#include "ieh/market.hpp"
#include "ieh/oracle.hpp"

namespace ieh {

enum class Stage { DayAhead, IntraDay, RealTime };

// Relative forecast-error half-widths per stage, tightening toward delivery.
struct ForecastModel {
    double da_err_res = 0.30, id_err_res = 0.10, rt_err_res = 0.05;
    double da_err_load = 0.20, id_err_load = 0.08, rt_err_load = 0.03;
    std::uint64_t seed = 42;

    void validate() const;
    bool deterministic() const;
};

// forecast_t = truth_t * (1 + u_t), u_t uniform in the stage band, clipped at
// zero. Draws are a pure function of (seed, stage, hub_tag, t_c, field, t),
// so refreshing the same window twice gives identical series. Prices are
// known exactly and pass through.
ExogenousSeries generate_forecasts(const ExogenousSeries& truth,
                                   const ForecastModel& model, Stage stage,
                                   std::uint64_t hub_tag = 0, int t_c = 0);

// One hub as the simulator sees it: configuration plus realized series.
struct HubTruth {
    std::string id;
    HubConfig cfg;
    ExogenousSeries truth;
};

// Committed outcome of one hub over the day.
struct HubDay {
    std::string id;
    Schedule committed;            // realized, reconciled schedule
    double cost_local = 0.0;       // settled at clearing prices
    double cost_utility = 0.0;     // settled at utility prices
    double imbalance_energy = 0.0; // kWh settled outside the market
};

struct DayResult {
    DayAheadResult day_ahead;
    std::vector<ClearingRecord> clearings;       // one per period
    std::vector<HubDay> hubs;
    std::vector<EquivalenceReport> equivalence;  // per hub, one entry/period
    Eigen::VectorXd transformer;                 // committed exchange
    Eigen::VectorXd imbalance;                   // per-period unserved power
    double total_cost_local = 0.0;
    double total_cost_utility = 0.0;
    int rt_iterations_total = 0;
    int rt_iterations_max = 0;
};

// Full day under transactive control: one day-ahead clearing on DA-band
// forecasts, then one real-time clearing per period on refreshed forecasts
// (RT band for the clearing period, intra-day band for the tail). Committed
// flows pass through the storage-equivalence transformation, are reconciled
// against realized truth (curtailment first, grid deviation second, logged
// as imbalance energy), and the carried state advances on realized flows.
DayResult run_day(const std::vector<HubTruth>& fleet, const ForecastModel& model,
                  const TransformerConfig& tr, const MarketParams& params,
                  double lambda_min = 0.0, double lambda_max = 1.5);

struct CentralizedDayResult {
    std::vector<HubDay> hubs;
    Eigen::VectorXd transformer;
    Eigen::VectorXd lambda_e;  // implied local price per period
    Eigen::VectorXd imbalance;
    double total_cost_utility = 0.0;
};

// Rolling benchmark under the same information pattern: each period the
// whole fleet is re-solved centrally on refreshed forecasts, the current
// period is committed and reconciled exactly like run_day.
CentralizedDayResult run_day_centralized(const std::vector<HubTruth>& fleet,
                                         const ForecastModel& model,
                                         const TransformerConfig& tr);

}  // namespace ieh
