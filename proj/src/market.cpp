#include "ieh/market.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace ieh {

void TransformerConfig::validate() const {
    if (!(p_in_max > 0) || !(p_out_max > 0))
        throw ConfigError("TransformerConfig: capacities must be positive");
}

void MarketParams::validate() const {
    if (!(eta0 > 0) || !(tau > 0) || !(delta0 > 0))
        throw ConfigError("MarketParams: step schedule must be positive");
    if (!(balance_tol > 0) || !(price_tol > 0))
        throw ConfigError("MarketParams: tolerances must be positive");
    if (da_max_iterations <= 0)
        throw ConfigError("MarketParams: da_max_iterations must be positive");
}

MarketParams default_market_params(const TransformerConfig& cfg,
                                   double lambda_min, double lambda_max) {
    cfg.validate();
    if (!(lambda_max > lambda_min))
        throw ConfigError("default_market_params: empty price range");
    MarketParams p;
    p.balance_tol = 0.005 * cfg.p_in_max;
    p.price_tol = (lambda_max - lambda_min) / 512.0;
    return p;
}

TransformerResponse transformer_response(double lambda, double mu,
                                         const TransformerConfig& cfg,
                                         double price_tol) {
    TransformerResponse r;
    if (std::abs(lambda - mu) <= price_tol) {
        r.lo = -cfg.p_out_max;
        r.hi = cfg.p_in_max;
        r.indifferent = true;
    } else if (lambda > mu) {
        r.lo = r.hi = cfg.p_in_max;
    } else {
        r.lo = r.hi = -cfg.p_out_max;
    }
    return r;
}

TransformerResponse transformer_acceptable(double lambda, double mu,
                                           const TransformerConfig& cfg,
                                           double price_tol) {
    TransformerResponse r;
    if (std::abs(lambda - mu) <= price_tol) {
        r.lo = -cfg.p_out_max;
        r.hi = cfg.p_in_max;
        r.indifferent = true;
    } else if (lambda > mu) {
        r.lo = 0.0;  // buying locally above the utility price loses money
        r.hi = cfg.p_in_max;
    } else {
        r.lo = -cfg.p_out_max;
        r.hi = 0.0;
    }
    return r;
}

double residual(const std::vector<Bid>& bids, double p_tr) {
    double sum = 0.0;
    for (const auto& b : bids) {
        if (!std::isfinite(b.p_e))
            throw ProtocolError("residual: missing bid from hub '" + b.hub + "'");
        sum += b.p_e;
    }
    return sum - p_tr;
}

namespace {

struct HubRound {
    std::vector<Schedule> schedules;
};

// One synchronous round: every hub solves its remaining-horizon problem at
// the broadcast prices. Solves are independent and run on a small pool.
HubRound solve_round(const std::vector<HubAgent>& fleet,
                     const PriceVector& prices, int t_c) {
    HubRound round;
    round.schedules.resize(fleet.size());
    std::vector<std::exception_ptr> errors(fleet.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < fleet.size();
             i = next.fetch_add(1)) {
            try {
                const auto& a = fleet[i];
                const auto prob =
                    build_autonomous_lp(a.cfg, a.forecast, prices, t_c, a.state);
                const auto sol = solve(prob.lp);
                if (sol.status != LpStatus::Optimal)
                    throw ProtocolError("hub '" + a.id +
                                        "' returned no valid bid: subproblem " +
                                        (sol.status == LpStatus::Infeasible
                                             ? "infeasible"
                                             : "unbounded"));
                round.schedules[i] = decode_schedule(sol, prob.map);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t nthreads = std::min<size_t>(hw, std::max<size_t>(fleet.size(), 1));
    if (nthreads <= 1 || fleet.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return round;
}

// Settles the transformer against aggregate hub demand at a broadcast price:
// the response range is a point unless the price matches the utility price,
// so the leftover is the imbalance the coordinator reacts to.
double settle(double agg, const TransformerResponse& resp, double* p_tr) {
    const double q = resp.clamp(agg);
    if (p_tr) *p_tr = q;
    return agg - q;
}

}  // namespace

DayAheadResult day_ahead_clear(const std::vector<HubAgent>& fleet,
                               const Eigen::VectorXd& mu_e,
                               const TransformerConfig& tr,
                               const MarketParams& params, double lambda_min,
                               double lambda_max) {
    tr.validate();
    params.validate();
    const int T = static_cast<int>(mu_e.size());
    if (T <= 0) throw StructuralError("day_ahead_clear: empty horizon");
    for (const auto& a : fleet)
        if (a.forecast.size() != T)
            throw StructuralError("day_ahead_clear: hub '" + a.id +
                                  "' forecast horizon mismatch");

    DayAheadResult res;
    res.prices.lambda_min = lambda_min;
    res.prices.lambda_max = lambda_max;
    res.prices.lambda_e = mu_e;
    res.prices.clamp_into_bounds();
    res.transformer = Eigen::VectorXd::Zero(T);
    res.residuals = Eigen::VectorXd::Zero(T);

    for (int k = 0; k <= params.da_max_iterations; ++k) {
        const HubRound round = solve_round(fleet, res.prices, 0);
        Eigen::VectorXd agg = Eigen::VectorXd::Zero(T);
        for (const auto& s : round.schedules) agg += s.p_e;
        // Gradient signal: imbalance against the profit-maximizing response.
        // Settled quantities: what the transformer accepts at these prices.
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(T);
        for (int t = 0; t < T; ++t) {
            const auto resp = transformer_response(res.prices.lambda_e[t],
                                                   mu_e[t], tr, params.price_tol);
            grad[t] = settle(agg[t], resp, nullptr);
            const auto acc = transformer_acceptable(
                res.prices.lambda_e[t], mu_e[t], tr, params.price_tol);
            res.residuals[t] = settle(agg[t], acc, &res.transformer[t]);
        }
        res.trace.push_back({res.prices.lambda_e, grad, 0.0});

        const double cap = params.delta0 / (1.0 + k / params.tau);
        const bool balanced =
            res.residuals.cwiseAbs().maxCoeff() <= params.balance_tol;
        if (grad.cwiseAbs().maxCoeff() <= params.balance_tol ||
            (balanced && cap <= params.price_tol)) {
            res.schedules = round.schedules;
            res.iterations = k;
            res.final_step_cap = cap;
            return res;
        }
        if (k == params.da_max_iterations) break;

        Eigen::VectorXd updated =
            res.prices.lambda_e +
            (params.eta0 * grad).cwiseMax(-cap).cwiseMin(cap);
        updated = updated.cwiseMax(lambda_min).cwiseMin(lambda_max);
        res.last_price_step =
            (updated - res.prices.lambda_e).cwiseAbs().maxCoeff();
        res.trace.back().step = cap;
        res.prices.lambda_e = updated;
    }
    throw DayAheadNonConvergence(
        "day_ahead_clear: no fixed point after " +
            std::to_string(params.da_max_iterations) + " iterations (max |dP| = " +
            std::to_string(res.residuals.cwiseAbs().maxCoeff()) + " kW)",
        std::move(res.trace));
}

namespace {

struct RtEval {
    double lambda = 0.0;
    double agg = 0.0;
    double imbalance = 0.0;  // against the profit-maximizing response
    std::vector<Schedule> schedules;
};

RtEval rt_evaluate(const std::vector<HubAgent>& fleet,
                   const PriceVector& da_prices, int t_c, double lambda,
                   const Eigen::VectorXd& mu_e, const TransformerConfig& tr,
                   const MarketParams& params) {
    const int T = static_cast<int>(mu_e.size());
    PriceVector spliced;
    spliced.lambda_min = da_prices.lambda_min;
    spliced.lambda_max = da_prices.lambda_max;
    spliced.lambda_e = da_prices.lambda_e.tail(T - t_c);
    spliced.lambda_e[0] = lambda;

    RtEval ev;
    ev.lambda = lambda;
    HubRound round = solve_round(fleet, spliced, t_c);
    for (const auto& s : round.schedules) ev.agg += s.p_e[0];
    const auto resp = transformer_response(lambda, mu_e[t_c], tr, params.price_tol);
    ev.imbalance = settle(ev.agg, resp, nullptr);
    ev.schedules = std::move(round.schedules);
    return ev;
}

ClearingRecord make_record(const std::vector<HubAgent>& fleet, const RtEval& ev,
                           int t_c, int iterations, bool boundary,
                           const Eigen::VectorXd& mu_e,
                           const TransformerConfig& tr,
                           const MarketParams& params) {
    ClearingRecord rec;
    rec.period = t_c;
    rec.price = ev.lambda;
    rec.iterations = iterations;
    rec.boundary = boundary;
    for (size_t i = 0; i < fleet.size(); ++i)
        rec.bids.push_back({fleet[i].id, ev.schedules[i].p_e[0],
                            iterations});
    // The price fixes willingness; quantity is settled at the aggregate,
    // clamped to what the transformer accepts without losing money.
    const auto acc = transformer_acceptable(ev.lambda, mu_e[t_c], tr,
                                            params.price_tol);
    rec.transformer_power = acc.clamp(ev.agg);
    rec.residual = ev.agg - rec.transformer_power;
    rec.converged = std::abs(rec.residual) <= params.balance_tol;
    return rec;
}

}  // namespace

RealTimeResult real_time_clear(const std::vector<HubAgent>& fleet,
                               const PriceVector& da_prices, int t_c,
                               const Eigen::VectorXd& mu_e,
                               const TransformerConfig& tr,
                               const MarketParams& params) {
    tr.validate();
    params.validate();
    const int T = static_cast<int>(mu_e.size());
    if (t_c < 0 || t_c >= T)
        throw StructuralError("real_time_clear: period out of range");
    if (da_prices.size() != T)
        throw StructuralError("real_time_clear: price vector horizon mismatch");
    if (fleet.empty())
        throw StructuralError("real_time_clear: empty fleet");

    const double lo0 = da_prices.lambda_min;
    const double hi0 = da_prices.lambda_max;
    const double range = hi0 - lo0;
    if (!(range > 0))
        throw StructuralError("real_time_clear: empty price range");
    // Every residual evaluation counts, including the two bracket primings;
    // the depth depends only on the price range and tolerance, never on the
    // fleet, so the tally is reproducible across fleet sizes.
    const int needed = std::max(
        2, static_cast<int>(std::ceil(std::log2(range / params.price_tol))));

    auto eval = [&](double lambda) {
        return rt_evaluate(fleet, da_prices, t_c, lambda, mu_e, tr, params);
    };

    std::vector<std::pair<double, double>> trace;
    int count = 0;

    RtEval at_hi = eval(hi0);
    ++count;
    trace.emplace_back(at_hi.lambda, at_hi.imbalance);
    RtEval at_lo = eval(lo0);
    ++count;
    trace.emplace_back(at_lo.lambda, at_lo.imbalance);

    RealTimeResult out;

    // Degenerate flat demand: both ends already balance. Clear at the
    // forecast price the hubs planned against.
    if (std::abs(at_hi.imbalance) <= params.balance_tol &&
        std::abs(at_lo.imbalance) <= params.balance_tol) {
        RtEval at_da = eval(da_prices.lambda_e[t_c]);
        ++count;
        trace.emplace_back(at_da.lambda, at_da.imbalance);
        out.record = make_record(fleet, at_da, t_c, count, false, mu_e, tr, params);
        out.record.evals = std::move(trace);
        out.schedules = std::move(at_da.schedules);
        return out;
    }

    if (at_lo.imbalance < at_hi.imbalance - 1e-6)
        throw NonConvergence(
            "real_time_clear: imbalance increases with price (dP(" +
            std::to_string(lo0) + ") = " + std::to_string(at_lo.imbalance) +
            " < dP(" + std::to_string(hi0) + ") = " +
            std::to_string(at_hi.imbalance) + ")");

    // One-sided imbalance: no interior root, clear at the bound.
    if (at_hi.imbalance > params.balance_tol) {
        out.record = make_record(fleet, at_hi, t_c, count, true, mu_e, tr, params);
        out.record.evals = std::move(trace);
        out.schedules = std::move(at_hi.schedules);
        return out;
    }
    if (at_lo.imbalance < -params.balance_tol) {
        out.record = make_record(fleet, at_lo, t_c, count, true, mu_e, tr, params);
        out.record.evals = std::move(trace);
        out.schedules = std::move(at_lo.schedules);
        return out;
    }

    while (count < needed) {
        const double mid = 0.5 * (at_lo.lambda + at_hi.lambda);
        RtEval at_mid = eval(mid);
        ++count;
        trace.emplace_back(at_mid.lambda, at_mid.imbalance);
        if (at_mid.imbalance > 0)
            at_lo = std::move(at_mid);
        else
            at_hi = std::move(at_mid);
    }

    // Prefer the high end: excess demand there is nonpositive, so the
    // aggregate fits the transformer whenever the period is servable at all.
    ClearingRecord rec_hi =
        make_record(fleet, at_hi, t_c, count, false, mu_e, tr, params);
    if (rec_hi.converged) {
        out.record = std::move(rec_hi);
        out.record.evals = std::move(trace);
        out.schedules = std::move(at_hi.schedules);
        return out;
    }
    ClearingRecord rec_lo =
        make_record(fleet, at_lo, t_c, count, false, mu_e, tr, params);
    if (rec_lo.converged ||
        std::abs(rec_lo.residual) < std::abs(rec_hi.residual)) {
        out.record = std::move(rec_lo);
        out.record.evals = std::move(trace);
        out.schedules = std::move(at_lo.schedules);
        return out;
    }
    out.record = std::move(rec_hi);
    out.record.evals = std::move(trace);
    out.schedules = std::move(at_hi.schedules);
    return out;
}

}  // namespace ieh
