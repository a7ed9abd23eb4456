#include "ieh/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace ieh {

void ForecastModel::validate() const {
    for (double w : {da_err_res, id_err_res, rt_err_res, da_err_load,
                     id_err_load, rt_err_load})
        if (!(w >= 0.0) || w >= 1.0)
            throw ConfigError("ForecastModel: half-widths must lie in [0, 1)");
}

bool ForecastModel::deterministic() const {
    return da_err_res == 0 && id_err_res == 0 && rt_err_res == 0 &&
           da_err_load == 0 && id_err_load == 0 && rt_err_load == 0;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Draw in [-w, w], a pure function of the identifying tuple.
double draw(const ForecastModel& m, Stage stage, std::uint64_t hub_tag, int t_c,
            int field, int t, double w) {
    if (w == 0.0) return 0.0;
    std::uint64_t k = m.seed;
    k = splitmix64(k ^ (0x5151ull + static_cast<std::uint64_t>(stage)));
    k = splitmix64(k ^ hub_tag);
    k = splitmix64(k ^ static_cast<std::uint64_t>(t_c));
    k = splitmix64(k ^ (static_cast<std::uint64_t>(field) << 32 |
                        static_cast<std::uint64_t>(t)));
    const double u01 = (k >> 11) * 0x1.0p-53;
    return w * (2.0 * u01 - 1.0);
}

double band(const ForecastModel& m, Stage s, bool res) {
    switch (s) {
        case Stage::DayAhead: return res ? m.da_err_res : m.da_err_load;
        case Stage::IntraDay: return res ? m.id_err_res : m.id_err_load;
        case Stage::RealTime: return res ? m.rt_err_res : m.rt_err_load;
    }
    return 0.0;
}

}  // namespace

ExogenousSeries generate_forecasts(const ExogenousSeries& truth,
                                   const ForecastModel& model, Stage stage,
                                   std::uint64_t hub_tag, int t_c) {
    model.validate();
    truth.validate();
    ExogenousSeries f = truth;
    const double w_res = band(model, stage, true);
    const double w_load = band(model, stage, false);
    for (int t = 0; t < truth.size(); ++t) {
        f.p_res[t] = std::max(
            0.0, truth.p_res[t] *
                     (1.0 + draw(model, stage, hub_tag, t_c, 0, t, w_res)));
        f.l_e[t] = std::max(
            0.0, truth.l_e[t] *
                     (1.0 + draw(model, stage, hub_tag, t_c, 1, t, w_load)));
        f.l_th[t] = std::max(
            0.0, truth.l_th[t] *
                     (1.0 + draw(model, stage, hub_tag, t_c, 2, t, w_load)));
    }
    return f;
}

namespace {

// Forecast window for one real-time clearing: realized history untouched,
// the clearing period at real-time accuracy, the tail at intra-day accuracy.
ExogenousSeries rt_window(const ExogenousSeries& truth,
                          const ForecastModel& model, std::uint64_t hub_tag,
                          int t_c) {
    ExogenousSeries w = truth;
    const ExogenousSeries id =
        generate_forecasts(truth, model, Stage::IntraDay, hub_tag, t_c);
    const ExogenousSeries rt =
        generate_forecasts(truth, model, Stage::RealTime, hub_tag, t_c);
    for (int t = t_c + 1; t < truth.size(); ++t) {
        w.p_res[t] = id.p_res[t];
        w.l_e[t] = id.l_e[t];
        w.l_th[t] = id.l_th[t];
    }
    w.p_res[t_c] = rt.p_res[t_c];
    w.l_e[t_c] = rt.l_e[t_c];
    w.l_th[t_c] = rt.l_th[t_c];
    return w;
}

// One period of one hub's schedule as a standalone single-period Schedule.
Schedule head_period(const Schedule& s) {
    Schedule h;
    h.p_e = s.p_e.head(1);
    h.g_chp = s.g_chp.head(1);
    h.g_gf = s.g_gf.head(1);
    h.p_ch_ees = s.p_ch_ees.head(1);
    h.p_dch_ees = s.p_dch_ees.head(1);
    h.h_ch_tes = s.h_ch_tes.head(1);
    h.h_dch_tes = s.h_dch_tes.head(1);
    h.p_curt = s.p_curt.head(1);
    h.h_curt = s.h_curt.head(1);
    h.l_e_sl = s.l_e_sl.head(1);
    h.l_th_sl = s.l_th_sl.head(1);
    h.soc_ees = s.soc_ees.head(1);
    h.soc_tes = s.soc_tes.head(1);
    return h;
}

struct CommitOutcome {
    double imbalance_energy = 0.0;  // grid deviation plus unserved, kWh
};

// Reconcile a committed period against realized truth. Renewable surplus or
// shortage goes to curtailment first; what curtailment cannot absorb becomes
// a grid deviation within the import limit; anything beyond that is counted
// unserved. Heat uses its curtailment, then the gas furnace.
CommitOutcome reconcile(Schedule& p, const HubConfig& cfg, double p_res_true,
                        double l_e_true, double l_th_true) {
    CommitOutcome out;
    double d_e = cfg.eta_ee * p.p_e[0] + cfg.eta_ge_chp * p.g_chp[0] +
                 p.p_dch_ees[0] - p.p_ch_ees[0] + p_res_true - p.p_curt[0] -
                 p.l_e_sl[0] - l_e_true;
    if (d_e > 0) {
        const double add = std::min(d_e, std::max(0.0, p_res_true - p.p_curt[0]));
        p.p_curt[0] += add;
        d_e -= add;
    } else if (d_e < 0) {
        const double sub = std::min(-d_e, std::max(0.0, p.p_curt[0]));
        p.p_curt[0] -= sub;
        d_e += sub;
    }
    if (std::abs(d_e) > 1e-12) {
        const double target = p.p_e[0] - d_e / cfg.eta_ee;
        const double clamped =
            std::clamp(target, -cfg.p_import_max, cfg.p_import_max);
        out.imbalance_energy += std::abs(clamped - p.p_e[0]) * cfg.eta_ee;
        out.imbalance_energy += std::abs(target - clamped) * cfg.eta_ee;
        p.p_e[0] = clamped;
    }

    double d_th = cfg.eta_gth_chp * p.g_chp[0] + cfg.eta_gth_gf * p.g_gf[0] +
                  p.h_dch_tes[0] - p.h_ch_tes[0] - p.h_curt[0] - p.l_th_sl[0] -
                  l_th_true;
    if (d_th > 0) {
        p.h_curt[0] += d_th;
        d_th = 0;
    } else if (d_th < 0) {
        const double sub = std::min(-d_th, std::max(0.0, p.h_curt[0]));
        p.h_curt[0] -= sub;
        d_th += sub;
        if (d_th < -1e-12 && cfg.eta_gth_gf > 0) {
            const double add = std::min(-d_th / cfg.eta_gth_gf,
                                        std::max(0.0, cfg.g_gf_max - p.g_gf[0]));
            p.g_gf[0] += add;
            d_th += add * cfg.eta_gth_gf;
            out.imbalance_energy += add * cfg.eta_gth_gf;
        }
        out.imbalance_energy += std::abs(std::min(d_th, 0.0));
    }
    return out;
}

void advance_state(HubState& st, const HubConfig& cfg, const Schedule& p,
                   double dt = 1.0) {
    st.soc_ees += dt * (cfg.eta_ch_ees * p.p_ch_ees[0] -
                        p.p_dch_ees[0] / cfg.eta_dch_ees);
    st.soc_tes += dt * (cfg.eta_ch_tes * p.h_ch_tes[0] -
                        p.h_dch_tes[0] / cfg.eta_dch_tes);
    st.l_e_sl_remaining =
        std::max(0.0, st.l_e_sl_remaining - dt * p.l_e_sl[0]);
    st.l_th_sl_remaining =
        std::max(0.0, st.l_th_sl_remaining - dt * p.l_th_sl[0]);
}

Eigen::VectorXd shared_mu(const std::vector<HubTruth>& fleet) {
    if (fleet.empty()) throw StructuralError("run_day: empty fleet");
    const Eigen::VectorXd mu = fleet.front().truth.mu_e;
    for (const auto& h : fleet)
        if (!h.truth.mu_e.isApprox(mu))
            throw StructuralError("run_day: hub '" + h.id +
                                  "' has a different utility tariff");
    return mu;
}

void set_period(Schedule& day, int t, const Schedule& p, double soc_e,
                double soc_t) {
    day.p_e[t] = p.p_e[0];
    day.g_chp[t] = p.g_chp[0];
    day.g_gf[t] = p.g_gf[0];
    day.p_ch_ees[t] = p.p_ch_ees[0];
    day.p_dch_ees[t] = p.p_dch_ees[0];
    day.h_ch_tes[t] = p.h_ch_tes[0];
    day.h_dch_tes[t] = p.h_dch_tes[0];
    day.p_curt[t] = p.p_curt[0];
    day.h_curt[t] = p.h_curt[0];
    day.l_e_sl[t] = p.l_e_sl[0];
    day.l_th_sl[t] = p.l_th_sl[0];
    day.soc_ees[t] = soc_e;
    day.soc_tes[t] = soc_t;
}

Schedule empty_day(int T) {
    Schedule s;
    s.p_e = s.g_chp = s.g_gf = Eigen::VectorXd::Zero(T);
    s.p_ch_ees = s.p_dch_ees = Eigen::VectorXd::Zero(T);
    s.h_ch_tes = s.h_dch_tes = Eigen::VectorXd::Zero(T);
    s.p_curt = s.h_curt = Eigen::VectorXd::Zero(T);
    s.l_e_sl = s.l_th_sl = Eigen::VectorXd::Zero(T);
    s.soc_ees = s.soc_tes = Eigen::VectorXd::Zero(T);
    return s;
}

}  // namespace

DayResult run_day(const std::vector<HubTruth>& fleet, const ForecastModel& model,
                  const TransformerConfig& tr, const MarketParams& params,
                  double lambda_min, double lambda_max) {
    model.validate();
    const Eigen::VectorXd mu = shared_mu(fleet);
    const int T = static_cast<int>(mu.size());
    const int N = static_cast<int>(fleet.size());

    DayResult res;
    res.transformer = Eigen::VectorXd::Zero(T);
    res.imbalance = Eigen::VectorXd::Zero(T);
    res.equivalence.resize(N);
    for (int n = 0; n < N; ++n)
        res.hubs.push_back({fleet[n].id, empty_day(T), 0.0, 0.0, 0.0});

    // Day-ahead clearing on day-ahead-quality forecasts.
    std::vector<HubAgent> agents;
    for (int n = 0; n < N; ++n)
        agents.push_back({fleet[n].id, fleet[n].cfg,
                          generate_forecasts(fleet[n].truth, model,
                                             Stage::DayAhead, n, 0),
                          initial_state(fleet[n].cfg)});
    res.day_ahead =
        day_ahead_clear(agents, mu, tr, params, lambda_min, lambda_max);

    std::vector<HubState> states;
    for (const auto& h : fleet) states.push_back(initial_state(h.cfg));

    for (int t_c = 0; t_c < T; ++t_c) {
        for (int n = 0; n < N; ++n) {
            agents[n].forecast = rt_window(fleet[n].truth, model, n, t_c);
            agents[n].state = states[n];
        }
        RealTimeResult rt;
        try {
            rt = real_time_clear(agents, res.day_ahead.prices, t_c, mu, tr,
                                 params);
        } catch (const DayAheadNonConvergence&) {
            throw;
        } catch (const NonConvergence& e) {
            throw NonConvergence("period " + std::to_string(t_c) + ": " +
                                 e.what());
        }
        res.clearings.push_back(rt.record);
        res.rt_iterations_total += rt.record.iterations;
        res.rt_iterations_max =
            std::max(res.rt_iterations_max, rt.record.iterations);

        double agg = 0.0;
        for (int n = 0; n < N; ++n) {
            const HubConfig& cfg = fleet[n].cfg;
            Schedule period = head_period(rt.schedules[n]);
            const ExogenousSeries slice = agents[n].forecast.slice(t_c, 1);
            auto [transformed, report] = transform_schedule(period, cfg, slice);
            res.equivalence[n].periods.push_back(report.periods[0]);

            const auto outcome =
                reconcile(transformed, cfg, fleet[n].truth.p_res[t_c],
                          fleet[n].truth.l_e[t_c], fleet[n].truth.l_th[t_c]);
            res.hubs[n].imbalance_energy += outcome.imbalance_energy;

            advance_state(states[n], cfg, transformed);
            set_period(res.hubs[n].committed, t_c, transformed,
                       states[n].soc_ees, states[n].soc_tes);

            const double gas = transformed.g_chp[0] + transformed.g_gf[0];
            res.hubs[n].cost_local += rt.record.price * transformed.p_e[0] +
                                      fleet[n].truth.mu_g[t_c] * gas;
            res.hubs[n].cost_utility += mu[t_c] * transformed.p_e[0] +
                                        fleet[n].truth.mu_g[t_c] * gas;
            agg += transformed.p_e[0];
        }
        res.transformer[t_c] = std::clamp(agg, -tr.p_out_max, tr.p_in_max);
        res.imbalance[t_c] = agg - res.transformer[t_c];
    }
    for (const auto& h : res.hubs) {
        res.total_cost_local += h.cost_local;
        res.total_cost_utility += h.cost_utility;
    }
    return res;
}

CentralizedDayResult run_day_centralized(const std::vector<HubTruth>& fleet,
                                         const ForecastModel& model,
                                         const TransformerConfig& tr) {
    model.validate();
    const Eigen::VectorXd mu = shared_mu(fleet);
    const int T = static_cast<int>(mu.size());
    const int N = static_cast<int>(fleet.size());

    CentralizedDayResult res;
    res.transformer = Eigen::VectorXd::Zero(T);
    res.lambda_e = Eigen::VectorXd::Zero(T);
    res.imbalance = Eigen::VectorXd::Zero(T);
    for (int n = 0; n < N; ++n)
        res.hubs.push_back({fleet[n].id, empty_day(T), 0.0, 0.0, 0.0});

    std::vector<HubState> states;
    for (const auto& h : fleet) states.push_back(initial_state(h.cfg));
    std::vector<HubAgent> agents;
    for (int n = 0; n < N; ++n)
        agents.push_back({fleet[n].id, fleet[n].cfg, fleet[n].truth,
                          states[n]});

    for (int t_c = 0; t_c < T; ++t_c) {
        for (int n = 0; n < N; ++n) {
            agents[n].forecast = rt_window(fleet[n].truth, model, n, t_c);
            agents[n].state = states[n];
        }
        const CentralizedResult central =
            solve_centralized(agents, mu, tr, t_c);
        res.lambda_e[t_c] = central.lambda_e[0];

        double agg = 0.0;
        for (int n = 0; n < N; ++n) {
            const HubConfig& cfg = fleet[n].cfg;
            Schedule period = head_period(central.schedules[n]);
            const ExogenousSeries slice = agents[n].forecast.slice(t_c, 1);
            auto [transformed, report] = transform_schedule(period, cfg, slice);
            const auto outcome =
                reconcile(transformed, cfg, fleet[n].truth.p_res[t_c],
                          fleet[n].truth.l_e[t_c], fleet[n].truth.l_th[t_c]);
            res.hubs[n].imbalance_energy += outcome.imbalance_energy;
            advance_state(states[n], cfg, transformed);
            set_period(res.hubs[n].committed, t_c, transformed,
                       states[n].soc_ees, states[n].soc_tes);
            const double gas = transformed.g_chp[0] + transformed.g_gf[0];
            res.hubs[n].cost_utility += mu[t_c] * transformed.p_e[0] +
                                        fleet[n].truth.mu_g[t_c] * gas;
            agg += transformed.p_e[0];
        }
        res.transformer[t_c] = std::clamp(agg, -tr.p_out_max, tr.p_in_max);
        res.imbalance[t_c] = agg - res.transformer[t_c];
    }
    for (const auto& h : res.hubs) res.total_cost_utility += h.cost_utility;
    return res;
}

}  // namespace ieh
