#include "ieh/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace ieh {

std::string format_double(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& path) {
    try {
        return json::parse(slurp(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

double num(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError("'" + key + "' must be a number");
    return j[key].get<double>();
}

HubConfig parse_hub(const json& j, double& load_scale, double& res_scale) {
    static const std::vector<std::string> known = {
        "name", "load_scale", "res_scale",
        "eta_ee", "eta_ge_chp", "eta_gth_chp", "eta_gth_gf",
        "eta_ch_ees", "eta_dch_ees", "eta_ch_tes", "eta_dch_tes",
        "ees_capacity", "tes_capacity",
        "ees_soc_min", "ees_soc_max", "tes_soc_min", "tes_soc_max",
        "ees_soc_init", "tes_soc_init",
        "p_ch_max", "p_dch_max", "h_ch_max", "h_dch_max",
        "g_chp_max", "g_gf_max", "p_import_max",
        "l_e_sl_total", "l_th_sl_total", "sl_rate_mult"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown hub field '" + key + "'");
    if (!j.contains("name") || !j["name"].is_string())
        throw ConfigError("hub entry needs a string 'name'");

    HubConfig c;
    c.name = j["name"].get<std::string>();
    c.eta_ee = num(j, "eta_ee", c.eta_ee);
    c.eta_ge_chp = num(j, "eta_ge_chp", c.eta_ge_chp);
    c.eta_gth_chp = num(j, "eta_gth_chp", c.eta_gth_chp);
    c.eta_gth_gf = num(j, "eta_gth_gf", c.eta_gth_gf);
    c.eta_ch_ees = num(j, "eta_ch_ees", c.eta_ch_ees);
    c.eta_dch_ees = num(j, "eta_dch_ees", c.eta_dch_ees);
    c.eta_ch_tes = num(j, "eta_ch_tes", c.eta_ch_tes);
    c.eta_dch_tes = num(j, "eta_dch_tes", c.eta_dch_tes);
    c.ees_capacity = num(j, "ees_capacity", c.ees_capacity);
    c.tes_capacity = num(j, "tes_capacity", c.tes_capacity);
    c.ees_soc_min = num(j, "ees_soc_min", c.ees_soc_min);
    c.ees_soc_max = num(j, "ees_soc_max", c.ees_soc_max);
    c.tes_soc_min = num(j, "tes_soc_min", c.tes_soc_min);
    c.tes_soc_max = num(j, "tes_soc_max", c.tes_soc_max);
    c.ees_soc_init = num(j, "ees_soc_init", c.ees_soc_init);
    c.tes_soc_init = num(j, "tes_soc_init", c.tes_soc_init);
    c.p_ch_max = num(j, "p_ch_max", c.p_ch_max);
    c.p_dch_max = num(j, "p_dch_max", c.p_dch_max);
    c.h_ch_max = num(j, "h_ch_max", c.h_ch_max);
    c.h_dch_max = num(j, "h_dch_max", c.h_dch_max);
    c.g_chp_max = num(j, "g_chp_max", c.g_chp_max);
    c.g_gf_max = num(j, "g_gf_max", c.g_gf_max);
    c.p_import_max = num(j, "p_import_max", c.p_import_max);
    c.l_e_sl_total = num(j, "l_e_sl_total", c.l_e_sl_total);
    c.l_th_sl_total = num(j, "l_th_sl_total", c.l_th_sl_total);
    c.sl_rate_mult = num(j, "sl_rate_mult", c.sl_rate_mult);
    load_scale = num(j, "load_scale", 1.0);
    res_scale = num(j, "res_scale", 1.0);
    if (load_scale <= 0 || res_scale < 0)
        throw ConfigError("hub '" + c.name + "': bad load_scale/res_scale");
    return c;
}

}  // namespace

ExogenousSeries load_series_csv(const std::string& path, double mu_g) {
    std::istringstream in(slurp(path));
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError(path + ": empty series file");
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "period,p_res,l_e,l_th,mu_e")
        throw ConfigError(path + ": expected header period,p_res,l_e,l_th,mu_e");

    std::vector<double> p_res, l_e, l_th, mu_e;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        int period;
        double a, b, c, d;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &period, &a, &b,
                        &c, &d) != 5)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": malformed row");
        if (period != static_cast<int>(p_res.size()))
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": periods must run 0..T-1 in order");
        p_res.push_back(a);
        l_e.push_back(b);
        l_th.push_back(c);
        mu_e.push_back(d);
    }
    if (p_res.empty()) throw ConfigError(path + ": no data rows");

    ExogenousSeries s;
    const int T = static_cast<int>(p_res.size());
    s.p_res = Eigen::Map<Eigen::VectorXd>(p_res.data(), T);
    s.l_e = Eigen::Map<Eigen::VectorXd>(l_e.data(), T);
    s.l_th = Eigen::Map<Eigen::VectorXd>(l_th.data(), T);
    s.mu_e = Eigen::Map<Eigen::VectorXd>(mu_e.data(), T);
    s.mu_g = Eigen::VectorXd::Constant(T, mu_g);
    s.validate();
    return s;
}

ScenarioSpec load_scenario(const std::string& path) {
    const json j = parse_json(path);
    const fs::path base = fs::path(path).parent_path();

    ScenarioSpec spec;
    spec.scenario_path = path;
    spec.name = j.value("name", fs::path(path).stem().string());
    if (!j.contains("fleet") || !j.contains("series"))
        throw ConfigError(path + ": 'fleet' and 'series' are required");
    spec.fleet_path = (base / j["fleet"].get<std::string>()).string();
    spec.series_path = (base / j["series"].get<std::string>()).string();

    if (!j.contains("transformer"))
        throw ConfigError(path + ": 'transformer' is required");
    spec.transformer.p_in_max = num(j["transformer"], "p_in_max", 0.0);
    spec.transformer.p_out_max = num(j["transformer"], "p_out_max", 0.0);
    spec.transformer.validate();

    double mu_g;
    if (j.contains("mu_g")) {
        mu_g = j["mu_g"].get<double>();
    } else if (j.contains("gas")) {
        const json& g = j["gas"];
        mu_g = gas_price_per_kwh(num(g, "price_per_m3", 3.3),
                                 num(g, "density_kg_per_m3", 0.79),
                                 num(g, "calorific_mj_per_kg", 45.0));
    } else {
        throw ConfigError(path + ": give either 'mu_g' or a 'gas' block");
    }

    spec.model = ForecastModel{};
    if (j.contains("errors")) {
        const json& e = j["errors"];
        spec.model.da_err_res = num(e, "da_res", spec.model.da_err_res);
        spec.model.id_err_res = num(e, "id_res", spec.model.id_err_res);
        spec.model.rt_err_res = num(e, "rt_res", spec.model.rt_err_res);
        spec.model.da_err_load = num(e, "da_load", spec.model.da_err_load);
        spec.model.id_err_load = num(e, "id_load", spec.model.id_err_load);
        spec.model.rt_err_load = num(e, "rt_load", spec.model.rt_err_load);
    } else {
        spec.model.da_err_res = spec.model.id_err_res = spec.model.rt_err_res = 0;
        spec.model.da_err_load = spec.model.id_err_load =
            spec.model.rt_err_load = 0;
    }
    spec.model.seed = j.value("seed", std::uint64_t{42});
    spec.model.validate();

    if (j.contains("lambda")) {
        spec.lambda_min = num(j["lambda"], "min", 0.0);
        spec.lambda_max = num(j["lambda"], "max", 1.5);
    }
    if (spec.lambda_min >= spec.lambda_max)
        throw ConfigError(path + ": lambda.min must be below lambda.max");

    spec.params = default_market_params(spec.transformer, spec.lambda_min,
                                        spec.lambda_max);
    if (j.contains("market")) {
        const json& m = j["market"];
        spec.params.eta0 = num(m, "eta0", spec.params.eta0);
        spec.params.delta0 = num(m, "delta0", spec.params.delta0);
        spec.params.tau = num(m, "tau", spec.params.tau);
        spec.params.da_max_iterations = static_cast<int>(
            num(m, "da_max_iterations", spec.params.da_max_iterations));
        spec.params.balance_tol = num(m, "balance_tol", spec.params.balance_tol);
        spec.params.price_tol = num(m, "price_tol", spec.params.price_tol);
    }
    spec.params.validate();

    const ExogenousSeries base_series =
        load_series_csv(spec.series_path, mu_g);

    const json fleet_json = parse_json(spec.fleet_path);
    if (!fleet_json.contains("hubs") || !fleet_json["hubs"].is_array() ||
        fleet_json["hubs"].empty())
        throw ConfigError(spec.fleet_path + ": needs a nonempty 'hubs' array");
    for (const json& hj : fleet_json["hubs"]) {
        double load_scale, res_scale;
        HubConfig cfg = parse_hub(hj, load_scale, res_scale);
        cfg.validate();
        ExogenousSeries truth = base_series;
        truth.p_res *= res_scale;
        truth.l_e *= load_scale;
        truth.l_th *= load_scale;
        spec.fleet.push_back({cfg.name, std::move(cfg), std::move(truth)});
    }
    for (size_t i = 0; i < spec.fleet.size(); ++i)
        for (size_t k = i + 1; k < spec.fleet.size(); ++k)
            if (spec.fleet[i].id == spec.fleet[k].id)
                throw ConfigError(spec.fleet_path + ": duplicate hub name '" +
                                  spec.fleet[i].id + "'");
    return spec;
}

double replicate_fleet(std::vector<HubTruth>& fleet, int n) {
    if (n <= 0) throw ConfigError("fleet size must be positive");
    const int orig = static_cast<int>(fleet.size());
    auto total_load = [](const std::vector<HubTruth>& f) {
        double s = 0.0;
        for (const auto& h : f) s += h.truth.l_e.sum();
        return s;
    };
    const double before = total_load(fleet);
    if (n < orig) {
        fleet.resize(n);
    } else {
        for (int i = orig; i < n; ++i) {
            HubTruth copy = fleet[i % orig];
            const std::string suffix = "-r" + std::to_string(i / orig + 1);
            copy.id += suffix;
            copy.cfg.name += suffix;
            fleet.push_back(std::move(copy));
        }
    }
    // Capacity multiplier follows the fleet's aggregate load, not the hub
    // count, so the congestion pattern survives scaling.
    return total_load(fleet) / before;
}

std::vector<HubAgent> make_agents(const std::vector<HubTruth>& fleet,
                                  const ForecastModel& model, Stage stage,
                                  int t_c) {
    std::vector<HubAgent> agents;
    for (size_t n = 0; n < fleet.size(); ++n)
        agents.push_back({fleet[n].id, fleet[n].cfg,
                          generate_forecasts(fleet[n].truth, model, stage, n,
                                             t_c),
                          initial_state(fleet[n].cfg)});
    return agents;
}

namespace {

void row(std::string& out, std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
        if (!first) out += ',';
        out += c;
        first = false;
    }
    out += '\n';
}

std::string schedule_panel(const std::vector<std::string>& hub_ids,
                           const std::vector<const Schedule*>& schedules,
                           int t0) {
    std::string out =
        "hub,period,p_e,g_chp,g_gf,p_ch_ees,p_dch_ees,h_ch_tes,h_dch_tes,"
        "p_curt,h_curt,l_e_sl,l_th_sl,soc_ees,soc_tes\n";
    for (size_t n = 0; n < hub_ids.size(); ++n) {
        const Schedule& s = *schedules[n];
        for (int t = 0; t < s.size(); ++t)
            row(out, {hub_ids[n], std::to_string(t0 + t),
                      format_double(s.p_e[t]), format_double(s.g_chp[t]),
                      format_double(s.g_gf[t]), format_double(s.p_ch_ees[t]),
                      format_double(s.p_dch_ees[t]),
                      format_double(s.h_ch_tes[t]),
                      format_double(s.h_dch_tes[t]),
                      format_double(s.p_curt[t]), format_double(s.h_curt[t]),
                      format_double(s.l_e_sl[t]), format_double(s.l_th_sl[t]),
                      format_double(s.soc_ees[t]),
                      format_double(s.soc_tes[t])});
    }
    return out;
}

}  // namespace

std::string csv_prices(const DayAheadResult& da) {
    std::string out = "iteration,period,price,residual,step\n";
    for (size_t k = 0; k < da.trace.size(); ++k) {
        const DaIteration& it = da.trace[k];
        for (int t = 0; t < it.prices.size(); ++t)
            row(out, {std::to_string(k), std::to_string(t),
                      format_double(it.prices[t]),
                      format_double(it.residuals[t]),
                      format_double(it.step)});
    }
    for (int t = 0; t < da.prices.lambda_e.size(); ++t)
        row(out, {std::to_string(da.iterations), std::to_string(t),
                  format_double(da.prices.lambda_e[t]),
                  format_double(da.residuals[t]),
                  format_double(da.last_price_step)});
    return out;
}

std::string csv_clearing(const std::vector<ClearingRecord>& clearings) {
    std::string out =
        "period,price,transformer_power,residual,iterations,converged,"
        "boundary\n";
    for (const auto& c : clearings)
        row(out, {std::to_string(c.period), format_double(c.price),
                  format_double(c.transformer_power),
                  format_double(c.residual), std::to_string(c.iterations),
                  c.converged ? "1" : "0", c.boundary ? "1" : "0"});
    return out;
}

std::string csv_schedules(const std::vector<std::string>& hub_ids,
                          const std::vector<Schedule>& schedules, int t0) {
    std::vector<const Schedule*> ptrs;
    for (const auto& s : schedules) ptrs.push_back(&s);
    return schedule_panel(hub_ids, ptrs, t0);
}

std::string csv_day_result(const DayResult& day) {
    std::vector<std::string> ids;
    std::vector<const Schedule*> ptrs;
    for (const auto& h : day.hubs) {
        ids.push_back(h.id);
        ptrs.push_back(&h.committed);
    }
    return schedule_panel(ids, ptrs, 0);
}

std::string csv_centralized(const std::vector<std::string>& hub_ids,
                            const CentralizedDayResult& day) {
    std::vector<const Schedule*> ptrs;
    for (const auto& h : day.hubs) ptrs.push_back(&h.committed);
    return schedule_panel(hub_ids, ptrs, 0);
}

std::string csv_equivalence(const std::vector<std::string>& hub_ids,
                            const std::vector<EquivalenceReport>& reports) {
    std::string out =
        "hub,period,delta_s_ees,delta_p_dch,delta_s_tes,delta_h_dch,"
        "condition_lhs,condition_rhs,satisfied,vacuous\n";
    for (size_t n = 0; n < hub_ids.size(); ++n)
        for (size_t t = 0; t < reports[n].periods.size(); ++t) {
            const PeriodEquivalence& pe = reports[n].periods[t];
            row(out, {hub_ids[n], std::to_string(t),
                      format_double(pe.delta_s_ees),
                      format_double(pe.delta_p_dch),
                      format_double(pe.delta_s_tes),
                      format_double(pe.delta_h_dch),
                      format_double(pe.condition_lhs),
                      format_double(pe.condition_rhs),
                      pe.condition_satisfied ? "1" : "0",
                      pe.condition_vacuous ? "1" : "0"});
        }
    return out;
}

std::string RunManifest::to_json() const {
    json j;
    j["subcommand"] = subcommand;
    j["scenario"] = scenario_path;
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    j["overrides"] = json::object();
    for (const auto& [k, v] : overrides) j["overrides"][k] = v;
    j["version"] = version;
    return j.dump(2) + "\n";
}

void ArtifactSet::add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
}

void ArtifactSet::commit(const std::string& dir) const {
    fs::create_directories(dir);
    std::vector<std::pair<fs::path, fs::path>> staged;
    for (const auto& [name, content] : files_) {
        const fs::path final_path = fs::path(dir) / name;
        const fs::path tmp = final_path.string() + ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) throw ConfigError("failed to write '" + tmp.string() + "'");
        staged.emplace_back(tmp, final_path);
    }
    for (const auto& [tmp, final_path] : staged)
        fs::rename(tmp, final_path);
}

}  // namespace ieh
