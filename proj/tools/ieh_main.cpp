#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ieh/io.hpp"

using namespace ieh;

namespace {

constexpr const char* kVersion = "ieh 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitVerifyFailed = 4;

struct Options {
    std::string scenario;
    std::string out = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    double tol_balance = 0.0, tol_price = 0.0;
    bool tol_balance_set = false, tol_price_set = false;
    int max_iters = 0;
    bool max_iters_set = false;
    int hubs = 0;
    bool hubs_set = false;
    bool compare = false;
    bool dump_lp = false;
    int period = 0;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("scenario", o.scenario, "Scenario definition file")
        ->required();
    cmd->add_option("--out", o.out, "Output directory")->envname("IEH_OUT");
    cmd->add_option("--seed", o.seed, "Forecast RNG seed override")
        ->envname("IEH_SEED");
    cmd->add_option("--tol-balance", o.tol_balance,
                    "Power-balance tolerance, kW")
        ->envname("IEH_TOL_BALANCE");
    cmd->add_option("--tol-price", o.tol_price,
                    "Price tolerance, currency/kWh")
        ->envname("IEH_TOL_PRICE");
    cmd->add_option("--max-iters", o.max_iters,
                    "Day-ahead iteration limit")
        ->envname("IEH_MAX_ITERS");
    cmd->add_option("--hubs", o.hubs,
                    "Scale the fleet to this many hubs by replication; "
                    "transformer capacity and balance tolerance scale along")
        ->envname("IEH_HUBS");
}

// Applies command-line overrides to a loaded scenario and records them.
RunManifest apply_overrides(ScenarioSpec& spec, Options& o,
                            const std::string& subcommand, CLI::App* cmd) {
    o.seed_set = cmd->count("--seed") > 0;
    o.tol_balance_set = cmd->count("--tol-balance") > 0;
    o.tol_price_set = cmd->count("--tol-price") > 0;
    o.max_iters_set = cmd->count("--max-iters") > 0;
    o.hubs_set = cmd->count("--hubs") > 0;

    RunManifest man;
    man.subcommand = subcommand;
    man.scenario_path = spec.scenario_path;
    man.output_dir = o.out;
    man.version = kVersion;

    if (o.seed_set) {
        spec.model.seed = o.seed;
        man.overrides["seed"] = std::to_string(o.seed);
    }
    if (o.hubs_set) {
        const double mult = replicate_fleet(spec.fleet, o.hubs);
        spec.transformer.p_in_max *= mult;
        spec.transformer.p_out_max *= mult;
        spec.params.balance_tol *= mult;
        man.overrides["hubs"] = std::to_string(o.hubs);
    }
    if (o.tol_balance_set) {
        spec.params.balance_tol = o.tol_balance;
        man.overrides["tol_balance"] = format_double(o.tol_balance);
    }
    if (o.tol_price_set) {
        spec.params.price_tol = o.tol_price;
        man.overrides["tol_price"] = format_double(o.tol_price);
    }
    if (o.max_iters_set) {
        spec.params.da_max_iterations = o.max_iters;
        man.overrides["max_iters"] = std::to_string(o.max_iters);
    }
    man.seed = spec.model.seed;
    spec.params.validate();
    return man;
}

std::vector<std::string> hub_ids(const ScenarioSpec& spec) {
    std::vector<std::string> ids;
    for (const auto& h : spec.fleet) ids.push_back(h.id);
    return ids;
}

int cmd_day_ahead(ScenarioSpec& spec, const Options& o,
                  const RunManifest& man) {
    const Eigen::VectorXd mu = spec.fleet.front().truth.mu_e;
    const auto agents =
        make_agents(spec.fleet, spec.model, Stage::DayAhead);

    ArtifactSet art;
    if (o.dump_lp) {
        const PriceVector flat{
            Eigen::VectorXd::Constant(mu.size(), spec.lambda_min),
            spec.lambda_min, spec.lambda_max};
        const HubProblem prob = build_autonomous_lp(
            agents.front().cfg, agents.front().forecast, flat, 0,
            agents.front().state);
        std::ostringstream ss;
        dump_tableau(prob.lp, ss);
        art.add("lp_dump.txt", ss.str());
    }

    try {
        const DayAheadResult da =
            day_ahead_clear(agents, mu, spec.transformer, spec.params,
                            spec.lambda_min, spec.lambda_max);
        art.add("prices.csv", csv_prices(da));
        art.add("schedules.csv", csv_schedules(hub_ids(spec), da.schedules, 0));
        art.add("manifest.json", man.to_json());
        art.commit(o.out);
        std::printf("day-ahead converged in %d iterations, final step %s\n",
                    da.iterations, format_double(da.last_price_step).c_str());
        return kExitOk;
    } catch (const DayAheadNonConvergence& e) {
        // Emit the trace so the stall can be inspected.
        DayAheadResult partial;
        partial.trace = e.trace;
        partial.prices.lambda_e = e.trace.back().prices;
        partial.residuals = e.trace.back().residuals;
        partial.iterations = static_cast<int>(e.trace.size());
        partial.last_price_step = e.trace.back().step;
        ArtifactSet fail;
        fail.add("prices.csv", csv_prices(partial));
        fail.add("manifest.json", man.to_json());
        fail.commit(o.out);
        std::fprintf(stderr, "day-ahead: %s\n", e.what());
        return kExitNonConvergence;
    }
}

int cmd_real_time(ScenarioSpec& spec, const Options& o,
                  const RunManifest& man) {
    const Eigen::VectorXd mu = spec.fleet.front().truth.mu_e;
    if (o.period < 0 || o.period >= mu.size())
        throw ConfigError("--period out of range");

    auto agents = make_agents(spec.fleet, spec.model, Stage::DayAhead);
    const DayAheadResult da =
        day_ahead_clear(agents, mu, spec.transformer, spec.params,
                        spec.lambda_min, spec.lambda_max);
    for (size_t n = 0; n < agents.size(); ++n)
        agents[n].forecast = generate_forecasts(
            spec.fleet[n].truth, spec.model, Stage::RealTime, n, o.period);
    const RealTimeResult rt = real_time_clear(
        agents, da.prices, o.period, mu, spec.transformer, spec.params);

    ArtifactSet art;
    art.add("clearing.csv", csv_clearing({rt.record}));
    art.add("schedules.csv",
            csv_schedules(hub_ids(spec), rt.schedules, o.period));
    art.add("manifest.json", man.to_json());
    art.commit(o.out);
    std::printf("period %d cleared at %s in %d evaluations\n", o.period,
                format_double(rt.record.price).c_str(), rt.record.iterations);
    return kExitOk;
}

int satisfied_count(const std::vector<EquivalenceReport>& reports, int& total) {
    int ok = 0;
    total = 0;
    for (const auto& r : reports)
        for (const auto& pe : r.periods) {
            ++total;
            if (pe.condition_satisfied) ++ok;
        }
    return ok;
}

int cmd_simulate_day(ScenarioSpec& spec, const Options& o,
                     const RunManifest& man) {
    const DayResult day = run_day(spec.fleet, spec.model, spec.transformer,
                                  spec.params, spec.lambda_min,
                                  spec.lambda_max);

    int total_periods = 0;
    const int ok = satisfied_count(day.equivalence, total_periods);
    int rt_min = day.clearings.empty() ? 0 : day.clearings.front().iterations;
    for (const auto& c : day.clearings)
        rt_min = std::min(rt_min, c.iterations);

    std::ostringstream sum;
    sum << "scenario: " << spec.name << "\n";
    sum << "hubs: " << spec.fleet.size() << "\n";
    sum << "periods: " << day.clearings.size() << "\n";
    sum << "total cost (local prices): "
        << format_double(day.total_cost_local) << "\n";
    sum << "total cost (utility prices): "
        << format_double(day.total_cost_utility) << "\n";
    sum << "imbalance energy (kWh): "
        << format_double(day.imbalance.cwiseAbs().sum()) << "\n";
    sum << "day-ahead iterations: " << day.day_ahead.iterations << "\n";
    sum << "real-time evaluations: total " << day.rt_iterations_total
        << ", max " << day.rt_iterations_max << ", min " << rt_min << "\n";
    sum << "exactness condition satisfied: " << ok << "/" << total_periods
        << "\n";

    ArtifactSet art;
    if (o.compare) {
        const CentralizedDayResult central =
            run_day_centralized(spec.fleet, spec.model, spec.transformer);
        const double gap =
            (day.total_cost_utility - central.total_cost_utility) /
            std::abs(central.total_cost_utility);
        sum << "centralized benchmark cost: "
            << format_double(central.total_cost_utility) << "\n";
        sum << "gap vs centralized: " << format_double(100.0 * gap) << "%\n";
        art.add("centralized.csv", csv_centralized(hub_ids(spec), central));
    }

    art.add("prices.csv", csv_prices(day.day_ahead));
    art.add("clearing.csv", csv_clearing(day.clearings));
    art.add("day_result.csv", csv_day_result(day));
    art.add("equivalence.csv", csv_equivalence(hub_ids(spec), day.equivalence));
    art.add("summary.txt", sum.str());
    art.add("manifest.json", man.to_json());
    art.commit(o.out);
    std::fputs(sum.str().c_str(), stdout);
    return kExitOk;
}

int cmd_centralized(ScenarioSpec& spec, const Options& o,
                    const RunManifest& man) {
    const CentralizedDayResult day =
        run_day_centralized(spec.fleet, spec.model, spec.transformer);

    std::vector<ClearingRecord> clearings;
    for (int t = 0; t < day.transformer.size(); ++t) {
        ClearingRecord c;
        c.period = t;
        c.price = day.lambda_e[t];
        c.transformer_power = day.transformer[t];
        c.residual = day.imbalance[t];
        c.iterations = 0;
        c.converged = true;
        clearings.push_back(c);
    }

    std::ostringstream sum;
    sum << "scenario: " << spec.name << "\n";
    sum << "hubs: " << spec.fleet.size() << "\n";
    sum << "total cost (utility prices): "
        << format_double(day.total_cost_utility) << "\n";
    sum << "imbalance energy (kWh): "
        << format_double(day.imbalance.cwiseAbs().sum()) << "\n";

    ArtifactSet art;
    art.add("day_result.csv", csv_centralized(hub_ids(spec), day));
    art.add("clearing.csv", csv_clearing(clearings));
    art.add("summary.txt", sum.str());
    art.add("manifest.json", man.to_json());
    art.commit(o.out);
    std::fputs(sum.str().c_str(), stdout);
    return kExitOk;
}

int cmd_verify(ScenarioSpec& spec, const Options& o, const RunManifest& man) {
    const int T = spec.fleet.front().truth.size();
    if (T > 6)
        throw ConfigError(
            "verify-equivalence certifies by exhaustive mode enumeration and "
            "is limited to 6 periods; point it at a short fixture such as "
            "data/verify_mini.json");

    bool all_ok = true;
    std::vector<EquivalenceReport> reports;
    std::printf("%-10s %6s %12s %12s %10s %10s\n", "hub", "period", "lhs",
                "rhs", "status", "obj_delta");
    for (size_t n = 0; n < spec.fleet.size(); ++n) {
        const HubTruth& h = spec.fleet[n];
        PriceVector prices{h.truth.mu_e.cwiseMax(spec.lambda_min)
                               .cwiseMin(spec.lambda_max),
                           spec.lambda_min, spec.lambda_max};
        const HubState st = initial_state(h.cfg);
        const HubProblem prob =
            build_autonomous_lp(h.cfg, h.truth, prices, 0, st);
        const LpSolution sol = solve(prob.lp);
        if (sol.status != LpStatus::Optimal)
            throw ConfigError("hub '" + h.id + "': relaxed problem is " +
                              std::string(to_string(sol.status)));
        const Schedule relaxed = decode_schedule(sol, prob.map);
        const double exact = brute_force_oracle(h.cfg, h.truth, prices);

        std::string status = "ok";
        EquivalenceReport rep;
        double obj_delta = 0.0;
        try {
            auto [transformed, r] = transform_schedule(relaxed, h.cfg, h.truth);
            rep = std::move(r);
            const double relaxed_obj =
                evaluate_cost(transformed, h.truth, prices).total;
            obj_delta = std::abs(relaxed_obj - exact);
            if (obj_delta > 1e-6) {
                status = "GAP";
                all_ok = false;
            }
        } catch (const TransformInfeasible& e) {
            rep = exactness_condition(relaxed, h.cfg, h.truth);
            status = "VIOLATED@" + std::to_string(e.period());
            obj_delta = std::nan("");
            all_ok = false;
        }
        for (size_t t = 0; t < rep.periods.size(); ++t) {
            const auto& pe = rep.periods[t];
            const char* flag = pe.condition_vacuous     ? "vacuous"
                               : pe.condition_satisfied ? status.c_str()
                                                        : "UNSAT";
            std::printf("%-10s %6zu %12.5g %12.5g %10s %10.3g\n",
                        h.id.c_str(), t, pe.condition_lhs, pe.condition_rhs,
                        flag, obj_delta);
            if (!pe.condition_satisfied && !pe.condition_vacuous)
                all_ok = false;
        }
        reports.push_back(std::move(rep));
    }

    ArtifactSet art;
    art.add("equivalence.csv", csv_equivalence(hub_ids(spec), reports));
    art.add("manifest.json", man.to_json());
    art.commit(o.out);
    std::printf("certification: %s\n", all_ok ? "all equivalences hold"
                                              : "violations found");
    return all_ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interconnected energy-hub market simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Options o;
    CLI::App* da = app.add_subcommand(
        "day-ahead", "Clear the day-ahead market and emit the price trace");
    da->add_flag("--dump-lp", o.dump_lp,
                 "Also dump the first hub's compiled problem");
    CLI::App* rt = app.add_subcommand(
        "real-time", "Clear one period after a day-ahead pass");
    rt->add_option("--period", o.period, "Period to clear (0-based)");
    CLI::App* sim = app.add_subcommand(
        "simulate-day", "Run the full day: one day-ahead, then one "
                        "real-time clearing per period");
    sim->add_flag("--compare", o.compare,
                  "Also run the centralized benchmark and report the gap");
    CLI::App* cen = app.add_subcommand(
        "centralized", "Rolling centralized benchmark over the day");
    CLI::App* ver = app.add_subcommand(
        "verify-equivalence",
        "Certify storage-equivalence exactness against exhaustive "
        "enumeration (horizon <= 6)");
    for (CLI::App* cmd : {da, rt, sim, cen, ver}) add_common(cmd, o);

    CLI11_PARSE(app, argc, argv);

    CLI::App* active = app.get_subcommands().front();
    try {
        ScenarioSpec spec = load_scenario(o.scenario);
        const RunManifest man =
            apply_overrides(spec, o, active->get_name(), active);
        if (active == da) return cmd_day_ahead(spec, o, man);
        if (active == rt) return cmd_real_time(spec, o, man);
        if (active == sim) return cmd_simulate_day(spec, o, man);
        if (active == cen) return cmd_centralized(spec, o, man);
        return cmd_verify(spec, o, man);
    } catch (const DayAheadNonConvergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNonConvergence;
    } catch (const NonConvergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNonConvergence;
    } catch (const TransformInfeasible& e) {
        std::fprintf(stderr, "error: period %d: %s\n", e.period(), e.what());
        return kExitVerifyFailed;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
}
