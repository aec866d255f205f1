#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fogpipe/errors.hpp"

namespace fogpipe::bench {

// Lead Time = WIP / ACR.
double little_law(double wip_units, double acr_per_s);

enum class TimeDist { Deterministic, Exponential };

std::string_view time_dist_name(TimeDist d);
std::optional<TimeDist> time_dist_from_name(std::string_view name);

struct QueueStats {
    double wip = 0.0;         // time-averaged jobs in system
    double acr = 0.0;         // completions per second over the run
    double lead_time_s = 0.0; // mean sojourn
    double utilization = 0.0; // mean service / mean interarrival
    bool saturated = false;   // utilization >= 1
};

struct QueueResult {
    QueueStats stats;
    std::vector<double> sojourn_s; // per job, arrival order
};

// Single-server FIFO queue with deterministic or seeded-exponential
// interarrival and service times. WIP is integrated over the busy horizon
// and checked against ACR x lead time before returning.
QueueResult simulate_queue(double interarrival_s, double service_time_s, std::size_t n_jobs,
                           std::uint64_t seed, TimeDist arrival_dist, TimeDist service_dist);

struct PowerModel {
    std::string name;
    double active_mw = 0.0;
};

PowerModel pi_power();     // 198 mW active draw
PowerModel edison_power(); // 529 mW active draw

// Energy in millijoules for a span of active time under the model.
double energy_estimate(double active_s, const PowerModel& model);

enum class ScalingModel { Constant, Linear, NLogN, Quadratic };

std::string_view scaling_model_name(ScalingModel m);

struct ScalingFit {
    ScalingModel model = ScalingModel::Constant;
    double coefficient = 0.0;
    double r_squared = 0.0;
};

// Least-squares fit of t = c * f(n) over f in {1, n, n ln n, n^2}; the model
// with the highest r^2 wins, ties to the simpler (earlier) model.
ScalingFit fit_scaling(std::span<const std::pair<double, double>> points);

enum class Stage { Load, Condition, Analyze, Transmit, Total };

std::string_view stage_name(Stage s);

struct StageTiming {
    std::size_t n_datasets = 0;
    Stage stage = Stage::Load;
    double wall_ms = 0.0;
    double cpu_pct = 0.0;
    double mem_pct = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr std::string_view kTimingsCsvHeader = "n_datasets,stage,wall_ms,cpu_pct,mem_pct,seed";

// For each dataset count: synthesize that many canonical sessions and run the
// signal pipeline, timing the load / condition / analyze / transmit stages
// plus the enclosing total. Row structure is deterministic; timing values are
// whatever the host measures.
std::vector<StageTiming> profile_pipeline(std::span<const std::size_t> n_datasets_list,
                                          std::uint64_t seed);

void write_timings_csv(std::ostream& out, std::span<const StageTiming> timings);

struct QueueScenario {
    std::string name;
    double interarrival_s = 60.0;
    double service_s = 12.39;
    std::size_t n_jobs = 200;
    TimeDist arrival_dist = TimeDist::Deterministic;
    TimeDist service_dist = TimeDist::Deterministic;
    PowerModel power = pi_power();
};

struct ScenarioResult {
    QueueScenario scenario;
    QueueResult queue;
    double little_lead_s = 0.0; // little_law(1, 1 / service_s)
    double energy_mj = 0.0;     // realized busy time x active power
};

ScenarioResult run_scenario(const QueueScenario& scenario, std::uint64_t seed);

nlohmann::ordered_json scenario_json(const ScenarioResult& result);
nlohmann::ordered_json report_json(std::span<const ScenarioResult> scenarios,
                                   const ScalingFit& fit);

} // namespace fogpipe::bench
