#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "ieh/market.hpp"

using namespace ieh;
using namespace ieh::testing;

namespace {

const TransformerConfig kTr{100.0, 80.0};

// Hub with inelastic electric load and optional CHP as the only substitute
// for grid power.
HubConfig inelastic_hub(double load_cap_chp_gas = 0.0) {
    HubConfig h;
    h.name = "inelastic";
    h.eta_ee = 1.0;
    h.eta_ge_chp = 0.35;
    h.eta_gth_chp = 0.45;
    h.g_chp_max = load_cap_chp_gas;
    h.p_import_max = 500.0;
    h.ees_capacity = h.tes_capacity = 0.0;
    h.ees_soc_min = h.ees_soc_max = h.ees_soc_init = 0.0;
    h.tes_soc_min = h.tes_soc_max = h.tes_soc_init = 0.0;
    return h;
}

ExogenousSeries constant_series(int T, double l_e, double p_res = 0.0) {
    ExogenousSeries s;
    s.p_res = Eigen::VectorXd::Constant(T, p_res);
    s.l_e = Eigen::VectorXd::Constant(T, l_e);
    s.l_th = Eigen::VectorXd::Zero(T);
    s.mu_e = Eigen::VectorXd::Constant(T, 0.5);
    s.mu_g = Eigen::VectorXd::Constant(T, gas_price_per_kwh(3.3, 0.79, 45.0));
    return s;
}

std::vector<HubAgent> replicate(const HubConfig& cfg, const ExogenousSeries& exo,
                                int n) {
    std::vector<HubAgent> fleet;
    for (int i = 0; i < n; ++i) {
        HubAgent a{cfg.name + "-" + std::to_string(i), cfg, exo,
                   initial_state(cfg)};
        fleet.push_back(std::move(a));
    }
    return fleet;
}

}  // namespace

TEST_CASE("transformer response: strict preference and indifference") {
    TransformerConfig tr{100.0, 80.0};
    auto r = transformer_response(1.0, 0.5, tr, 0.003);
    CHECK(r.lo == 100.0);
    CHECK(r.hi == 100.0);
    CHECK_FALSE(r.indifferent);
    r = transformer_response(0.2, 0.5, tr, 0.003);
    CHECK(r.lo == -80.0);
    CHECK(r.hi == -80.0);
    r = transformer_response(0.5, 0.5, tr, 0.003);
    CHECK(r.lo == -80.0);
    CHECK(r.hi == 100.0);
    CHECK(r.indifferent);

    // Break-even settlement ranges at a fixed price.
    auto a = transformer_acceptable(1.0, 0.5, tr, 0.003);
    CHECK(a.lo == 0.0);
    CHECK(a.hi == 100.0);
    a = transformer_acceptable(0.2, 0.5, tr, 0.003);
    CHECK(a.lo == -80.0);
    CHECK(a.hi == 0.0);
}

TEST_CASE("residual arithmetic and missing bids") {
    CHECK(residual({{"a", 3.0, 0}, {"b", -1.0, 0}}, 2.0) == doctest::Approx(0.0));
    CHECK(residual({{"a", 5.0, 0}}, 2.0) == doctest::Approx(3.0));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(residual({{"a", 1.0, 0}, {"hub-7", nan, 0}}, 0.0),
                         doctest::Contains("hub-7"), ProtocolError);
}

TEST_CASE("day-ahead: zero hubs settle immediately") {
    const auto mu = Eigen::VectorXd::Constant(4, 0.5);
    const auto res = day_ahead_clear({}, mu, kTr,
                                     default_market_params(kTr, 0.0, 1.5));
    CHECK(res.iterations == 0);
    CHECK(res.residuals.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(res.prices.lambda_e.isApprox(mu));
}

TEST_CASE("day-ahead: uncongested fleet clears at the utility price") {
    const auto cfg = test_hub();
    const auto exo = test_series(24);
    TransformerConfig tr{400.0, 400.0};
    const auto fleet = replicate(cfg, exo, 2);
    const auto res = day_ahead_clear(fleet, exo.mu_e, tr,
                                     default_market_params(tr, 0.0, 1.5));
    CHECK(res.iterations == 0);
    CHECK(res.prices.lambda_e.isApprox(exo.mu_e));
    CHECK(res.schedules.size() == 2);
    for (int t = 0; t < 24; ++t) {
        CHECK(res.transformer[t] <= tr.p_in_max + 1e-9);
        CHECK(res.transformer[t] >= -tr.p_out_max - 1e-9);
        CHECK(std::abs(res.residuals[t]) <= 0.005 * tr.p_in_max);
    }
}

TEST_CASE("day-ahead: congestion raises the price to the substitution point") {
    // Load 100 kW against 80 kW of import capacity; 80 kW-gas of CHP frees
    // 28 kW once the local price crosses mu_g / eta_ge.
    const auto cfg = inelastic_hub(80.0);
    const auto exo = constant_series(3, 100.0);
    TransformerConfig tr{80.0, 80.0};
    const auto params = default_market_params(tr, 0.0, 1.5);
    const auto res = day_ahead_clear({{"h", cfg, exo, initial_state(cfg)}}, exo.mu_e,
                                     tr, params);
    const double threshold = exo.mu_g[0] / cfg.eta_ge_chp;
    for (int t = 0; t < 3; ++t) {
        CHECK(res.prices.lambda_e[t] > exo.mu_e[t]);
        CHECK(res.prices.lambda_e[t] == doctest::Approx(threshold).epsilon(0.02));
        CHECK(res.transformer[t] <= tr.p_in_max + 1e-9);
        CHECK(std::abs(res.residuals[t]) <= params.balance_tol);
    }
    CHECK(res.iterations > 0);
    CHECK(res.final_step_cap <= params.price_tol);
    // Every broadcast price stayed within bounds.
    for (const auto& it : res.trace) {
        CHECK(it.prices.minCoeff() >= 0.0);
        CHECK(it.prices.maxCoeff() <= 1.5);
    }
}

TEST_CASE("day-ahead: unservable congestion raises NonConvergence with trace") {
    const auto cfg = inelastic_hub(0.0);  // no substitute for grid power
    const auto exo = constant_series(2, 100.0);
    TransformerConfig tr{80.0, 80.0};
    auto params = default_market_params(tr, 0.0, 1.5);
    params.da_max_iterations = 40;
    try {
        day_ahead_clear({{"h", cfg, exo, initial_state(cfg)}}, exo.mu_e, tr,
                        params);
        FAIL("expected DayAheadNonConvergence");
    } catch (const DayAheadNonConvergence& e) {
        CHECK(e.trace.size() == 41);
        CHECK(std::string(e.what()).find("40") != std::string::npos);
    }
}

TEST_CASE("real-time: evaluation count is 9 and fleet-size independent") {
    const auto exo = test_series(24);
    const auto da = flat_prices(24, 0.7);
    for (int n : {1, 3, 6}) {
        TransformerConfig tr{150.0 * n, 150.0 * n};
        const auto params = default_market_params(tr, 0.0, 1.5);
        const auto fleet = replicate(test_hub(), exo, n);
        const auto res = real_time_clear(fleet, da, 12, exo.mu_e, tr, params);
        CHECK(res.record.iterations == 9);
        CHECK(res.record.evals.size() == 9);
        CHECK_FALSE(res.record.boundary);
        CHECK(res.record.converged);
        // Bracket priming: imbalance at the price floor dominates the ceiling.
        CHECK(res.record.evals[1].second >= res.record.evals[0].second);
        for (const auto& [lam, dp] : res.record.evals) {
            CHECK(lam >= 0.0);
            CHECK(lam <= 1.5);
        }
        // Conservation at the committed clearing.
        double agg = 0.0;
        for (const auto& b : res.record.bids) agg += b.p_e;
        CHECK(std::abs(agg - res.record.transformer_power) <=
              params.balance_tol);
        CHECK(res.schedules.size() == static_cast<size_t>(n));
        CHECK(res.schedules[0].size() == 12);  // remaining horizon
    }
}

TEST_CASE("real-time: import-side boundary clears at the price ceiling") {
    const auto cfg = inelastic_hub(0.0);
    const auto exo = constant_series(4, 100.0);
    TransformerConfig tr{50.0, 50.0};
    const auto params = default_market_params(tr, 0.0, 1.5);
    const auto res = real_time_clear({{"h", cfg, exo, initial_state(cfg)}},
                                     flat_prices(4, 0.5), 1, exo.mu_e, tr,
                                     params);
    CHECK(res.record.boundary);
    CHECK(res.record.price == 1.5);
    CHECK(res.record.iterations == 2);
    CHECK(res.record.transformer_power == doctest::Approx(50.0));
    CHECK(res.record.residual == doctest::Approx(50.0));
    CHECK_FALSE(res.record.converged);
}

TEST_CASE("real-time: export-side boundary clears at the price floor") {
    auto cfg = inelastic_hub(0.0);
    const auto exo = constant_series(4, 0.0, 100.0);  // pure producer
    TransformerConfig tr{50.0, 50.0};
    const auto params = default_market_params(tr, 0.1, 1.5);
    auto da = flat_prices(4, 0.5);
    da.lambda_min = 0.1;  // selling is strictly profitable at the floor
    const auto res = real_time_clear({{"h", cfg, exo, initial_state(cfg)}}, da, 0,
                                     exo.mu_e, tr, params);
    CHECK(res.record.boundary);
    CHECK(res.record.price == doctest::Approx(0.1));
    CHECK(res.record.transformer_power == doctest::Approx(-50.0));
    CHECK(res.record.residual == doctest::Approx(-50.0));
}

TEST_CASE("real-time: flat balanced demand clears at the forecast price") {
    const auto cfg = inelastic_hub(0.0);
    const auto exo = constant_series(4, 0.0);  // nothing to trade
    TransformerConfig tr{0.5, 0.5};
    auto params = default_market_params(tr, 0.0, 1.5);
    params.balance_tol = 1.0;  // transformer box is inside the tolerance
    const auto res = real_time_clear({{"h", cfg, exo, initial_state(cfg)}},
                                     flat_prices(4, 0.7), 2, exo.mu_e, tr,
                                     params);
    CHECK(res.record.price == doctest::Approx(0.7));
    CHECK(res.record.iterations == 3);
    CHECK(res.record.converged);
}

TEST_CASE("real-time: argument validation") {
    const auto exo = test_series(24);
    TransformerConfig tr{100.0, 100.0};
    const auto params = default_market_params(tr, 0.0, 1.5);
    const auto fleet = replicate(test_hub(), exo, 1);
    CHECK_THROWS_AS(
        real_time_clear(fleet, flat_prices(24, 0.7), 24, exo.mu_e, tr, params),
        StructuralError);
    CHECK_THROWS_AS(
        real_time_clear(fleet, flat_prices(23, 0.7), 0, exo.mu_e, tr, params),
        StructuralError);
    CHECK_THROWS_AS(
        real_time_clear({}, flat_prices(24, 0.7), 0, exo.mu_e, tr, params),
        StructuralError);
}
