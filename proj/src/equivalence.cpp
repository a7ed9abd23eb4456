#include "ieh/equivalence.hpp"

#include <algorithm>
#include <cmath>

namespace ieh {

double net_energy_change(const StorageFlow& f, double dt) {
    if (f.p_ch < -1e-9 || f.p_dch < -1e-9)
        throw StructuralError("net_energy_change: negative flow");
    // Tolerate solver-level negative noise on the bounds.
    return dt * (std::max(f.p_ch, 0.0) * f.eta_ch -
                 std::max(f.p_dch, 0.0) / f.eta_dch);
}

std::pair<double, double> equivalent_pair(double delta_s, double eta_ch,
                                          double eta_dch) {
    if (!(eta_ch > 0 && eta_ch <= 1 && eta_dch > 0 && eta_dch <= 1))
        throw StructuralError("equivalent_pair: efficiencies must be in (0,1]");
    if (delta_s >= 0) return {delta_s / eta_ch, 0.0};
    return {0.0, -delta_s * eta_dch};
}

bool EquivalenceReport::all_satisfied() const {
    for (const auto& p : periods)
        if (!p.condition_satisfied) return false;
    return true;
}

double EquivalenceReport::max_exclusivity_residual_before() const {
    double v = 0.0;
    for (const auto& p : periods)
        v = std::max(v, p.exclusivity_residual_before);
    return v;
}

namespace {

constexpr double kLosslessEps = 1e-12;

PeriodEquivalence evaluate_period(const Schedule& s, const HubConfig& cfg,
                                  const ExogenousSeries& exo, int t, double dt) {
    PeriodEquivalence pe;
    StorageFlow ees{s.p_ch_ees[t], s.p_dch_ees[t], cfg.eta_ch_ees,
                    cfg.eta_dch_ees};
    StorageFlow tes{s.h_ch_tes[t], s.h_dch_tes[t], cfg.eta_ch_tes,
                    cfg.eta_dch_tes};
    pe.delta_s_ees = net_energy_change(ees, dt);
    pe.delta_s_tes = net_energy_change(tes, dt);
    std::tie(pe.p_ch_tilde, pe.p_dch_tilde) =
        equivalent_pair(pe.delta_s_ees / dt, cfg.eta_ch_ees, cfg.eta_dch_ees);
    std::tie(pe.h_ch_tilde, pe.h_dch_tilde) =
        equivalent_pair(pe.delta_s_tes / dt, cfg.eta_ch_tes, cfg.eta_dch_tes);
    pe.delta_p_dch = (pe.p_dch_tilde - pe.p_ch_tilde) -
                     (s.p_dch_ees[t] - s.p_ch_ees[t]);
    pe.delta_h_dch = (pe.h_dch_tilde - pe.h_ch_tilde) -
                     (s.h_dch_tes[t] - s.h_ch_tes[t]);
    pe.exclusivity_residual_before =
        std::max(s.p_ch_ees[t] * s.p_dch_ees[t], s.h_ch_tes[t] * s.h_dch_tes[t]);

    const double loss = 1.0 - cfg.eta_ch_ees * cfg.eta_dch_ees;
    if (loss <= kLosslessEps) {
        // Lossless storage: simultaneous charge/discharge is energy- and
        // cost-neutral, the condition degenerates.
        pe.condition_vacuous = true;
        pe.condition_satisfied = true;
        pe.condition_lhs = kInf;
        pe.condition_rhs = 0.0;
    } else {
        pe.condition_lhs = (exo.p_res[t] - s.p_curt[t]) / loss;
        pe.condition_rhs = std::min(
            s.p_ch_ees[t], s.p_dch_ees[t] / (cfg.eta_ch_ees * cfg.eta_dch_ees));
        pe.condition_satisfied = pe.condition_lhs >= pe.condition_rhs - 1e-9;
    }
    return pe;
}

}  // namespace

EquivalenceReport exactness_condition(const Schedule& sched, const HubConfig& cfg,
                                     const ExogenousSeries& exo) {
    if (exo.size() != sched.size())
        throw StructuralError("exactness_condition: length mismatch");
    EquivalenceReport rep;
    rep.periods.reserve(sched.size());
    for (int t = 0; t < sched.size(); ++t)
        rep.periods.push_back(evaluate_period(sched, cfg, exo, t, 1.0));
    return rep;
}

std::pair<Schedule, EquivalenceReport> transform_schedule(
    const Schedule& sched, const HubConfig& cfg, const ExogenousSeries& exo,
    double dt) {
    if (exo.size() != sched.size())
        throw StructuralError("transform_schedule: length mismatch");
    Schedule out = sched;
    EquivalenceReport rep;
    rep.periods.reserve(sched.size());
    for (int t = 0; t < sched.size(); ++t) {
        PeriodEquivalence pe = evaluate_period(sched, cfg, exo, t, dt);
        out.p_ch_ees[t] = pe.p_ch_tilde;
        out.p_dch_ees[t] = pe.p_dch_tilde;
        out.h_ch_tes[t] = pe.h_ch_tilde;
        out.h_dch_tes[t] = pe.h_dch_tilde;
        const double new_curt = sched.p_curt[t] + pe.delta_p_dch;
        if (new_curt < -1e-9 || new_curt > exo.p_res[t] + 1e-9)
            throw TransformInfeasible(
                "transform_schedule: adjusted curtailment " +
                    std::to_string(new_curt) + " outside [0, " +
                    std::to_string(exo.p_res[t]) + "] at period " +
                    std::to_string(t),
                t);
        out.p_curt[t] = new_curt;
        out.h_curt[t] = sched.h_curt[t] + pe.delta_h_dch;
        rep.periods.push_back(pe);
    }
    return {out, rep};
}

double brute_force_oracle(const HubConfig& cfg, const ExogenousSeries& exo,
                          const PriceVector& prices, double dt) {
    const int T = exo.size();
    if (T > 6)
        throw StructuralError(
            "brute_force_oracle: horizon " + std::to_string(T) +
            " exceeds the 6-period enumeration limit");
    if (T <= 0) throw StructuralError("brute_force_oracle: empty horizon");
    const HubState st = initial_state(cfg);
    double best = kInf;
    const int patterns = 1 << T;
    using M = HubLpMap;
    for (int ees_mask = 0; ees_mask < patterns; ++ees_mask) {
        for (int tes_mask = 0; tes_mask < patterns; ++tes_mask) {
            HubProblem prob = build_autonomous_lp(cfg, exo, prices, 0, st, dt);
            for (int t = 0; t < T; ++t) {
                // Bit set: charging allowed, discharging fixed to zero.
                if (ees_mask & (1 << t))
                    prob.lp.upper[prob.map.var(M::kPdch, t)] = 0.0;
                else
                    prob.lp.upper[prob.map.var(M::kPch, t)] = 0.0;
                if (tes_mask & (1 << t))
                    prob.lp.upper[prob.map.var(M::kHdch, t)] = 0.0;
                else
                    prob.lp.upper[prob.map.var(M::kHch, t)] = 0.0;
            }
            const LpSolution sol = solve(prob.lp);
            if (sol.status == LpStatus::Optimal)
                best = std::min(best, sol.objective);
        }
    }
    if (!std::isfinite(best))
        throw StructuralError("brute_force_oracle: every mode pattern infeasible");
    return best;
}

}  // namespace ieh
