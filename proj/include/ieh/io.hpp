#pragma once

#include <map>
#include <string>
#include <vector>

#include "ieh/scenario.hpp"

namespace ieh {

// Everything a run needs, resolved from one scenario file. Fleet and series
// paths inside the file are taken relative to the file's directory.
struct ScenarioSpec {
    std::string name;
    std::string scenario_path;
    std::string fleet_path;
    std::string series_path;
    std::vector<HubTruth> fleet;
    TransformerConfig transformer;
    ForecastModel model;
    double lambda_min = 0.0;
    double lambda_max = 1.5;
    MarketParams params;
};

ScenarioSpec load_scenario(const std::string& path);

// Shared base series from CSV (columns: period,p_res,l_e,l_th,mu_e) plus a
// constant gas price; rows must be 0..T-1 in order.
ExogenousSeries load_series_csv(const std::string& path, double mu_g);

// Grows (or truncates) a fleet to n hubs by cycling the originals, suffixing
// copies. Returns the ratio of new to old aggregate electric load, the
// multiplier for scaling the transformer box so congestion severity carries
// over.
double replicate_fleet(std::vector<HubTruth>& fleet, int n);

// Market view of the simulator's fleet at initial state and given forecasts.
std::vector<HubAgent> make_agents(const std::vector<HubTruth>& fleet,
                                  const ForecastModel& model, Stage stage,
                                  int t_c = 0);

// CSV serializers; schemas documented in the README. All numbers are printed
// with round-trip precision so identical runs yield identical bytes.
std::string csv_prices(const DayAheadResult& da);
std::string csv_clearing(const std::vector<ClearingRecord>& clearings);
std::string csv_schedules(const std::vector<std::string>& hub_ids,
                          const std::vector<Schedule>& schedules, int t0);
std::string csv_day_result(const DayResult& day);
std::string csv_centralized(const std::vector<std::string>& hub_ids,
                            const CentralizedDayResult& day);
std::string csv_equivalence(const std::vector<std::string>& hub_ids,
                            const std::vector<EquivalenceReport>& reports);

// Command-line record written next to the artifacts; rerunning the same
// command on the same inputs reproduces the outputs byte for byte.
struct RunManifest {
    std::string subcommand;
    std::string scenario_path;
    std::string output_dir;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> overrides;
    std::string version;

    std::string to_json() const;
};

// Staged output writer: contents accumulate in memory, commit() writes every
// file to a temporary name and renames, so a failed run leaves no partial
// artifacts behind.
class ArtifactSet {
public:
    void add(const std::string& name, std::string content);
    void commit(const std::string& dir) const;

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string format_double(double v);

}  // namespace ieh
