#pragma once

// Shared hub/series fixtures for the unit and acceptance suites.

#include <cstdint>
#include <random>

#include "ieh/hub.hpp"

namespace ieh::testing {

inline HubConfig test_hub() {
    HubConfig h;
    h.name = "test-hub";
    h.eta_ee = 0.97;
    h.eta_ge_chp = 0.35;
    h.eta_gth_chp = 0.45;
    h.eta_gth_gf = 0.90;
    h.eta_ch_ees = 0.95;
    h.eta_dch_ees = 0.95;
    h.eta_ch_tes = 0.92;
    h.eta_dch_tes = 0.92;
    h.ees_capacity = 100.0;
    h.tes_capacity = 80.0;
    h.ees_soc_min = 0.1;
    h.ees_soc_max = 0.9;
    h.ees_soc_init = 0.5;
    h.tes_soc_min = 0.1;
    h.tes_soc_max = 0.9;
    h.tes_soc_init = 0.5;
    h.p_ch_max = 25.0;
    h.p_dch_max = 25.0;
    h.h_ch_max = 20.0;
    h.h_dch_max = 20.0;
    h.g_chp_max = 80.0;
    h.g_gf_max = 80.0;
    h.p_import_max = 250.0;
    h.l_e_sl_total = 40.0;
    h.l_th_sl_total = 30.0;
    return h;
}

inline ExogenousSeries test_series(int T = 24) {
    ExogenousSeries s;
    s.p_res.resize(T);
    s.l_e.resize(T);
    s.l_th.resize(T);
    s.mu_e.resize(T);
    s.mu_g = Eigen::VectorXd::Constant(T, gas_price_per_kwh(3.3, 0.79, 45.0));
    for (int t = 0; t < T; ++t) {
        const int h = t % 24;
        const bool night = h <= 5 || h == 23;
        s.mu_e[t] = night ? 0.32 : (h >= 10 && h <= 20 ? 1.21 : 0.68);
        s.l_e[t] = 40.0 + 20.0 * std::sin((h - 6) * M_PI / 12.0);
        s.l_th[t] = 30.0 + 12.0 * std::cos(h * M_PI / 12.0);
        s.p_res[t] = (h >= 7 && h <= 17)
                         ? 35.0 * std::sin((h - 7) * M_PI / 10.0)
                         : 0.0;
    }
    return s;
}

inline PriceVector flat_prices(int T, double lambda) {
    PriceVector p;
    p.lambda_e = Eigen::VectorXd::Constant(T, lambda);
    p.lambda_min = 0.0;
    p.lambda_max = 1.5;
    return p;
}

// Randomized small single-hub instance for the relaxation-exactness sweeps.
struct RandomInstance {
    HubConfig cfg;
    ExogenousSeries exo;
    PriceVector prices;
};

inline RandomInstance random_instance(std::uint64_t seed, int T) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 12345);
    auto uni = [&](double lo, double hi) {
        return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
    };
    RandomInstance ri;
    HubConfig& h = ri.cfg;
    h = test_hub();
    h.name = "rand-" + std::to_string(seed);
    h.eta_ge_chp = uni(0.30, 0.40);
    h.eta_gth_chp = uni(0.40, 0.50);
    h.eta_gth_gf = uni(0.85, 0.95);
    h.eta_ch_ees = uni(0.90, 0.98);
    h.eta_dch_ees = uni(0.90, 0.98);
    h.eta_ch_tes = uni(0.90, 0.98);
    h.eta_dch_tes = uni(0.90, 0.98);
    h.ees_capacity = uni(40.0, 120.0);
    h.tes_capacity = uni(30.0, 90.0);
    h.ees_soc_init = uni(0.3, 0.7);
    h.tes_soc_init = uni(0.3, 0.7);
    h.p_ch_max = uni(10.0, 30.0);
    h.p_dch_max = uni(10.0, 30.0);
    h.h_ch_max = uni(8.0, 25.0);
    h.h_dch_max = uni(8.0, 25.0);
    h.g_chp_max = uni(40.0, 90.0);
    h.g_gf_max = uni(50.0, 100.0);
    h.l_e_sl_total = uni(0.0, 20.0) * T / 6.0;
    h.l_th_sl_total = uni(0.0, 15.0) * T / 6.0;

    ExogenousSeries& s = ri.exo;
    s.p_res.resize(T);
    s.l_e.resize(T);
    s.l_th.resize(T);
    s.mu_e.resize(T);
    s.mu_g = Eigen::VectorXd::Constant(T, gas_price_per_kwh(3.3, 0.79, 45.0));
    ri.prices.lambda_e.resize(T);
    for (int t = 0; t < T; ++t) {
        s.p_res[t] = uni(0.0, 60.0);
        s.l_e[t] = uni(10.0, 70.0);
        s.l_th[t] = uni(5.0, 50.0);
        s.mu_e[t] = uni(0.2, 1.3);
        ri.prices.lambda_e[t] = uni(0.05, 1.45);
    }
    return ri;
}

}  // namespace ieh::testing
