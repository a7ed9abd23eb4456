#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "ieh/errors.hpp"
#include "ieh/hub.hpp"

namespace ieh {

// Main-grid interface capacity seen by the local market.
struct TransformerConfig {
    double p_in_max = 0.0;   // kW, import from the main grid
    double p_out_max = 0.0;  // kW, export to the main grid

    void validate() const;
};

// One market participant: a hub plus the forecast and carried state it
// schedules against.
struct HubAgent {
    std::string id;
    HubConfig cfg;
    ExogenousSeries forecast;  // full-day series
    HubState state;
};

// A hub's response in one coordination round.
struct Bid {
    std::string hub;
    double p_e = 0.0;  // kW at the period being cleared
    int iteration = 0;
};

// Range of transformer powers compatible with profit maximization at a given
// local price. Strict preference collapses the range to a point.
struct TransformerResponse {
    double lo = 0.0;
    double hi = 0.0;
    bool indifferent = false;

    double clamp(double q) const { return std::min(std::max(q, lo), hi); }
};

// Profit (lambda - mu) * q over q in [-p_out_max, p_in_max]. Prices closer
// than price_tol count as equal and return the full interval.
TransformerResponse transformer_response(double lambda, double mu,
                                         const TransformerConfig& cfg,
                                         double price_tol);

// Powers the transformer is willing to deliver without losing money at the
// given price: [0, p_in_max] above mu, [-p_out_max, 0] below, the whole box
// at indifference. Used to settle quantity once the price is fixed.
TransformerResponse transformer_acceptable(double lambda, double mu,
                                           const TransformerConfig& cfg,
                                           double price_tol);

// Overall power imbalance: sum of hub bids minus transformer power. Throws
// ProtocolError naming the first hub whose bid is missing (NaN).
double residual(const std::vector<Bid>& bids, double p_tr);

struct MarketParams {
    double eta0 = 0.002;   // gradient gain, (currency/kWh) per kW imbalance
    double delta0 = 0.02;  // initial per-round price-movement cap, currency/kWh
    double tau = 40.0;     // cap decay constant: delta_k = delta0 / (1 + k/tau)
    int da_max_iterations = 2000;
    double balance_tol = 1.0;   // kW
    double price_tol = 1.5 / 512.0;  // currency/kWh

    void validate() const;
};

// balance_tol = 0.5% of import capacity, price_tol = price range / 2^9.
MarketParams default_market_params(const TransformerConfig& cfg,
                                   double lambda_min, double lambda_max);

struct DaIteration {
    Eigen::VectorXd prices;
    Eigen::VectorXd residuals;
    double step = 0.0;
};

struct DayAheadResult {
    PriceVector prices;                // converged forecast price vector
    std::vector<Schedule> schedules;   // per hub, at the converged prices
    Eigen::VectorXd transformer;       // cleared p_tr per period
    Eigen::VectorXd residuals;         // final per-period imbalance
    std::vector<DaIteration> trace;
    int iterations = 0;
    double last_price_step = 0.0;      // max_t |price movement| of final update
    double final_step_cap = 0.0;       // movement cap at the converged round
};

struct DayAheadNonConvergence : NonConvergence {
    DayAheadNonConvergence(const std::string& what, std::vector<DaIteration> tr)
        : NonConvergence(what), trace(std::move(tr)) {}
    std::vector<DaIteration> trace;
};

// Gradient iteration on the full-day price vector: broadcast prices, let each
// hub schedule autonomously, step prices along the aggregate imbalance
// (movement capped at delta_k per round), and project into
// [lambda_min, lambda_max]. Starts from the utility price, so uncongested
// periods are settled immediately. Because hub demand is a step function of
// price, the point-response imbalance need not vanish at the fixed point;
// the run also converges once the administratively settled imbalance is
// within balance_tol and the movement cap has decayed below price_tol, which
// pins every price to within about one price tolerance of its fixed point.
// Throws DayAheadNonConvergence with the full trace after da_max_iterations.
DayAheadResult day_ahead_clear(const std::vector<HubAgent>& fleet,
                               const Eigen::VectorXd& mu_e,
                               const TransformerConfig& tr,
                               const MarketParams& params,
                               double lambda_min = 0.0,
                               double lambda_max = 1.5);

struct ClearingRecord {
    int period = 0;
    double price = 0.0;                  // clearing price for the period
    std::vector<Bid> bids;               // cleared per-hub power
    double transformer_power = 0.0;
    double residual = 0.0;               // imbalance left after settlement
    int iterations = 0;                  // counted price evaluations
    bool converged = false;
    bool boundary = false;               // cleared at a price bound
    std::vector<std::pair<double, double>> evals;  // (price, imbalance)
};

struct RealTimeResult {
    ClearingRecord record;
    std::vector<Schedule> schedules;  // per hub, remaining horizon [t_c..]
};

// Clears period t_c by bisection on the scalar current-period price while the
// tail keeps the day-ahead forecast prices. The bracket is primed at
// lambda_max then lambda_min (both counted); with the default price tolerance
// the evaluation count is exactly 9 regardless of fleet size. One-sided
// residuals at a bound clear there and set the boundary flag. A bracket
// inversion (residual increasing in price) throws NonConvergence with both
// evaluations.
RealTimeResult real_time_clear(const std::vector<HubAgent>& fleet,
                               const PriceVector& da_prices, int t_c,
                               const Eigen::VectorXd& mu_e,
                               const TransformerConfig& tr,
                               const MarketParams& params);

}  // namespace ieh
