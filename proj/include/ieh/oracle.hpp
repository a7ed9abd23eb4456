#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ieh/market.hpp"

namespace ieh {

struct CentralizedResult {
    double objective = 0.0;
    std::vector<double> hub_costs;     // at utility prices
    std::vector<Schedule> schedules;   // per hub, remaining horizon
    Eigen::VectorXd transformer;       // p_tr per remaining period
    Eigen::VectorXd lambda;            // balance multiplier per period
    Eigen::VectorXd lambda_e;          // mu_e + lambda, the implied local price
    Eigen::VectorXd capacity_dual;     // shadow price of the binding capacity
    std::vector<unsigned char> dual_degenerate;  // binding with zero multiplier
    int iterations = 0;
};

// Whole-fleet benchmark: every hub's scheduling block plus the coupling rows
// sum_n p_e,t,n = p_tr,t with p_tr box-bounded by the transformer capacity,
// all in one program priced at the utility tariff. The sign of lambda is
// chosen so a binding import limit yields lambda > 0 (scarcity premium).
// Throws StructuralError naming the first unservable period (or the failing
// hub) when the coupled problem is infeasible.
CentralizedResult solve_centralized(const std::vector<HubAgent>& fleet,
                                    const Eigen::VectorXd& mu_e,
                                    const TransformerConfig& tr, int t_c);

}  // namespace ieh
