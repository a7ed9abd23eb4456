#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ieh/hub.hpp"

namespace ieh {

// Simultaneous charge/discharge values of one storage device in one period.
struct StorageFlow {
    double p_ch = 0.0;
    double p_dch = 0.0;
    double eta_ch = 1.0;
    double eta_dch = 1.0;
};

// Net energy change over one period: ch*eta_ch - dch/eta_dch (times dt).
double net_energy_change(const StorageFlow& f, double dt = 1.0);

// The charge/discharge pair with the same net energy change and one side
// exactly zero. delta_s >= 0 -> (delta_s/eta_ch, 0); else (0, -delta_s*eta_dch).
std::pair<double, double> equivalent_pair(double delta_s, double eta_ch,
                                          double eta_dch);

struct PeriodEquivalence {
    double delta_s_ees = 0.0;      // kWh
    double p_ch_tilde = 0.0, p_dch_tilde = 0.0;
    double delta_p_dch = 0.0;      // discharge-power change absorbed by p_curt
    double delta_s_tes = 0.0;
    double h_ch_tilde = 0.0, h_dch_tilde = 0.0;
    double delta_h_dch = 0.0;
    double condition_lhs = 0.0, condition_rhs = 0.0;
    bool condition_satisfied = true;
    bool condition_vacuous = false;  // lossless storage
    double exclusivity_residual_before = 0.0;  // max of the two products
};

struct EquivalenceReport {
    std::vector<PeriodEquivalence> periods;
    bool all_satisfied() const;
    double max_exclusivity_residual_before() const;
};

// Per-period evaluation of the sufficient-exactness condition
//   (p_res - p_curt)/(1 - eta_ch*eta_dch) >= min(p_ch, p_dch/(eta_ch*eta_dch))
// for the EES. Lossless storage makes the condition vacuous (reported as
// satisfied). The TES transformation is unconditionally exact because thermal
// curtailment has no upper bound; TES fields still carry the transform data.
EquivalenceReport exactness_condition(const Schedule& sched, const HubConfig& cfg,
                                     const ExogenousSeries& exo);

// Maps a relaxed optimum onto an exclusive-mode schedule with identical SOC
// trajectory and cost, folding the freed discharge power into curtailment.
// Throws TransformInfeasible (naming the first bad period) if the adjusted
// RES curtailment leaves [0, p_res].
std::pair<Schedule, EquivalenceReport> transform_schedule(
    const Schedule& sched, const HubConfig& cfg, const ExogenousSeries& exo,
    double dt = 1.0);

// Exact optimum of the non-relaxed problem by enumerating charge-vs-discharge
// mode patterns for EES and TES (4^T LPs). Refuses horizons above 6 periods.
double brute_force_oracle(const HubConfig& cfg, const ExogenousSeries& exo,
                          const PriceVector& prices, double dt = 1.0);

}  // namespace ieh
