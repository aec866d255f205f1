#include "fogpipe/bench.hpp"

#include <sys/resource.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>

#include "fogpipe/device.hpp"
#include "fogpipe/gateway.hpp"
#include "fogpipe/rng.hpp"
#include "fogpipe/signal.hpp"

namespace fogpipe::bench {

double little_law(double wip_units, double acr_per_s) {
    if (acr_per_s <= 0.0) throw DivisionError("ACR must be > 0");
    if (wip_units < 0.0) throw DomainError("WIP must be >= 0");
    return wip_units / acr_per_s;
}

std::string_view time_dist_name(TimeDist d) {
    return d == TimeDist::Deterministic ? "deterministic" : "exponential";
}

std::optional<TimeDist> time_dist_from_name(std::string_view name) {
    if (name == "deterministic") return TimeDist::Deterministic;
    if (name == "exponential") return TimeDist::Exponential;
    return std::nullopt;
}

QueueResult simulate_queue(double interarrival_s, double service_time_s, std::size_t n_jobs,
                           std::uint64_t seed, TimeDist arrival_dist, TimeDist service_dist) {
    if (interarrival_s <= 0.0 || service_time_s <= 0.0)
        throw DomainError("interarrival and service times must be > 0");
    if (n_jobs < 1) throw DomainError("n_jobs must be >= 1");

    std::mt19937_64 gen(seed);
    auto draw = [&gen](TimeDist dist, double mean) {
        return dist == TimeDist::Deterministic ? mean : rng::exponential(gen, mean);
    };

    std::vector<double> arrival(n_jobs);
    std::vector<double> depart(n_jobs);
    QueueResult result;
    result.sojourn_s.resize(n_jobs);

    double clock = 0.0;
    double server_free = 0.0;
    for (std::size_t i = 0; i < n_jobs; ++i) {
        clock += draw(arrival_dist, interarrival_s);
        arrival[i] = clock;
        const double start = std::max(clock, server_free);
        server_free = start + draw(service_dist, service_time_s);
        depart[i] = server_free;
        result.sojourn_s[i] = depart[i] - arrival[i];
    }

    // Time-averaged WIP by sweeping arrival/departure events over [0, end].
    struct Change { double t; int delta; };
    std::vector<Change> changes;
    changes.reserve(2 * n_jobs);
    for (double t : arrival) changes.push_back({t, +1});
    for (double t : depart) changes.push_back({t, -1});
    std::sort(changes.begin(), changes.end(), [](const Change& a, const Change& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.delta < b.delta; // departures first at equal times
    });
    const double horizon = depart.back();
    double area = 0.0;
    double prev_t = 0.0;
    int in_system = 0;
    for (const auto& ch : changes) {
        area += static_cast<double>(in_system) * (ch.t - prev_t);
        in_system += ch.delta;
        prev_t = ch.t;
    }

    auto& st = result.stats;
    st.wip = area / horizon;
    st.acr = static_cast<double>(n_jobs) / horizon;
    double sum = 0.0;
    for (double s : result.sojourn_s) sum += s;
    st.lead_time_s = sum / static_cast<double>(n_jobs);
    st.utilization = service_time_s / interarrival_s;
    st.saturated = st.utilization >= 1.0;

    // WIP = ACR x lead time must hold on a completed horizon.
    const double predicted = st.acr * st.lead_time_s;
    if (std::abs(st.wip - predicted) > 1e-6 * std::max(1.0, st.wip))
        throw std::logic_error("queue accounting violates WIP = ACR x lead time");
    return result;
}

PowerModel pi_power() { return {"pi", 198.0}; }
PowerModel edison_power() { return {"edison", 529.0}; }

double energy_estimate(double active_s, const PowerModel& model) {
    if (active_s < 0.0) throw DomainError("active time must be >= 0");
    if (model.active_mw <= 0.0) throw DomainError("active power must be > 0");
    return model.active_mw * active_s;
}

std::string_view scaling_model_name(ScalingModel m) {
    switch (m) {
    case ScalingModel::Constant: return "constant";
    case ScalingModel::Linear: return "linear";
    case ScalingModel::NLogN: return "nlogn";
    case ScalingModel::Quadratic: return "quadratic";
    }
    return "constant";
}

ScalingFit fit_scaling(std::span<const std::pair<double, double>> points) {
    std::vector<double> distinct;
    for (const auto& [n, t] : points) {
        if (n < 1.0) throw DomainError("dataset sizes must be >= 1");
        if (std::find(distinct.begin(), distinct.end(), n) == distinct.end())
            distinct.push_back(n);
    }
    if (distinct.size() < 3)
        throw InsufficientDataError("scaling fit needs >= 3 points with distinct n");

    double mean_t = 0.0;
    for (const auto& [n, t] : points) mean_t += t;
    mean_t /= static_cast<double>(points.size());
    double ss_tot = 0.0;
    for (const auto& [n, t] : points) ss_tot += (t - mean_t) * (t - mean_t);

    constexpr ScalingModel candidates[] = {ScalingModel::Constant, ScalingModel::Linear,
                                           ScalingModel::NLogN, ScalingModel::Quadratic};
    auto basis = [](ScalingModel m, double n) {
        switch (m) {
        case ScalingModel::Constant: return 1.0;
        case ScalingModel::Linear: return n;
        case ScalingModel::NLogN: return n * std::log(n);
        case ScalingModel::Quadratic: return n * n;
        }
        return 1.0;
    };

    ScalingFit best;
    bool have_best = false;
    for (const auto m : candidates) {
        double sft = 0.0;
        double sff = 0.0;
        for (const auto& [n, t] : points) {
            const double f = basis(m, n);
            sft += f * t;
            sff += f * f;
        }
        const double c = sff > 0.0 ? sft / sff : 0.0;
        double ss_res = 0.0;
        for (const auto& [n, t] : points) {
            const double e = t - c * basis(m, n);
            ss_res += e * e;
        }
        double r2;
        if (ss_tot > 0.0)
            r2 = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
        else
            r2 = ss_res <= 1e-12 ? 1.0 : 0.0;
        // Strictly-greater keeps ties on the simpler, earlier model.
        if (!have_best || r2 > best.r_squared + 1e-12) {
            best = {m, c, r2};
            have_best = true;
        }
    }
    return best;
}

std::string_view stage_name(Stage s) {
    switch (s) {
    case Stage::Load: return "load";
    case Stage::Condition: return "condition";
    case Stage::Analyze: return "analyze";
    case Stage::Transmit: return "transmit";
    case Stage::Total: return "total";
    }
    return "total";
}

namespace {

double cpu_seconds() {
    rusage ru{};
    ::getrusage(RUSAGE_SELF, &ru);
    auto tv = [](const timeval& t) {
        return static_cast<double>(t.tv_sec) + static_cast<double>(t.tv_usec) * 1e-6;
    };
    return tv(ru.ru_utime) + tv(ru.ru_stime);
}

// Resident set as a percentage of MemTotal; 0 when /proc is unreadable.
double mem_pct() {
    long rss_pages = 0;
    {
        std::ifstream statm("/proc/self/statm");
        long size_pages = 0;
        if (!(statm >> size_pages >> rss_pages)) return 0.0;
    }
    double total_kb = 0.0;
    {
        std::ifstream meminfo("/proc/meminfo");
        std::string key, unit;
        double value = 0.0;
        while (meminfo >> key >> value >> unit) {
            if (key == "MemTotal:") {
                total_kb = value;
                break;
            }
        }
    }
    if (total_kb <= 0.0) return 0.0;
    const double rss_kb =
        static_cast<double>(rss_pages) * static_cast<double>(::sysconf(_SC_PAGESIZE)) / 1024.0;
    return 100.0 * rss_kb / total_kb;
}

struct StageClock {
    std::chrono::steady_clock::time_point wall_start = std::chrono::steady_clock::now();
    double cpu_start = cpu_seconds();

    StageTiming sample(std::size_t n, Stage stage, std::uint64_t seed) const {
        const auto wall_end = std::chrono::steady_clock::now();
        const double wall_ms =
            std::chrono::duration<double, std::milli>(wall_end - wall_start).count();
        const double cpu_ms = (cpu_seconds() - cpu_start) * 1000.0;
        StageTiming t;
        t.n_datasets = n;
        t.stage = stage;
        t.wall_ms = wall_ms;
        t.cpu_pct = wall_ms > 0.0 ? std::clamp(100.0 * cpu_ms / wall_ms, 0.0, 100.0) : 0.0;
        t.mem_pct = mem_pct();
        t.seed = seed;
        return t;
    }
};

} // namespace

std::vector<StageTiming> profile_pipeline(std::span<const std::size_t> n_datasets_list,
                                          std::uint64_t seed) {
    for (const auto n : n_datasets_list)
        if (n < 1) throw DomainError("n_datasets must be >= 1");

    const auto protocol = device::TapProtocol::default_five_round();
    const signal::AnalysisParams analysis{};
    std::vector<StageTiming> rows;

    for (const auto n : n_datasets_list) {
        const StageClock total_clock;

        // Load: synthesize the datasets and packetize them.
        StageClock clock;
        std::vector<std::vector<signal::FlexSample>> streams;
        streams.reserve(n);
        device::GloveConfig glove;
        for (std::size_t i = 0; i < n; ++i) {
            glove.seed = rng::derive_seed(seed, "bench/dataset/" + std::to_string(i));
            streams.push_back(device::synth_session(protocol, glove));
            device::packetize(streams.back(), "bench" + std::to_string(i), 25);
        }
        rows.push_back(clock.sample(n, Stage::Load, seed));

        // Condition: voltage -> angle conversion plus clip/smooth.
        clock = StageClock{};
        std::vector<signal::AngleSeries> conditioned;
        conditioned.reserve(n);
        for (const auto& stream : streams) {
            signal::AngleSeries series;
            series.channel = signal::Channel::Index;
            for (const auto& s : stream) {
                if (s.channel != signal::Channel::Index) continue;
                series.samples.push_back(
                    {s.t_s, signal::resistance_to_angle(
                                signal::voltage_to_resistance(s, glove.sensor), glove.sensor)});
            }
            conditioned.push_back(signal::condition_series(series, analysis.conditioning));
        }
        rows.push_back(clock.sample(n, Stage::Condition, seed));

        // Analyze: tap detection and per-round frequency profiles.
        clock = StageClock{};
        std::vector<gateway::SessionSummary> summaries;
        summaries.reserve(n);
        for (std::size_t i = 0; i < conditioned.size(); ++i) {
            const auto events = signal::detect_taps(conditioned[i], analysis.threshold_deg,
                                                    analysis.min_gap_s);
            gateway::SessionSummary summary;
            summary.session_id = "bench" + std::to_string(i) + "-s0";
            summary.device_id = "bench" + std::to_string(i);
            summary.duration_s = protocol.total_duration_s();
            double start = 0.0;
            for (const auto& r : protocol.rounds) {
                std::vector<signal::TapEvent> in_round;
                for (const auto& e : events)
                    if (e.t_peak_s >= start && e.t_peak_s < start + r.duration_s)
                        in_round.push_back({e.t_peak_s - start, e.amplitude_deg, e.channel});
                const auto profile = signal::tap_frequency_profile(
                    in_round, r.duration_s, analysis.window_s, analysis.hop_s);
                gateway::RoundSummary rs;
                rs.label = r.label;
                rs.tap_count = in_round.size();
                for (const auto& p : profile.points) {
                    rs.mean_freq_hz += p.freq_hz;
                    rs.max_freq_hz = std::max(rs.max_freq_hz, p.freq_hz);
                }
                if (!profile.points.empty())
                    rs.mean_freq_hz /= static_cast<double>(profile.points.size());
                summary.total_taps += rs.tap_count;
                summary.rounds.push_back(std::move(rs));
                start += r.duration_s;
            }
            summaries.push_back(std::move(summary));
        }
        rows.push_back(clock.sample(n, Stage::Analyze, seed));

        // Transmit: policy application and wire encoding.
        clock = StageClock{};
        std::size_t bytes = 0;
        for (const auto& summary : summaries)
            bytes += gateway::total_wire_bytes(
                gateway::apply_forward_policy(summary, gateway::ForwardPolicy{}));
        rows.push_back(clock.sample(n, Stage::Transmit, seed));
        if (bytes == 0) throw std::logic_error("transmit stage produced no bytes");

        rows.push_back(total_clock.sample(n, Stage::Total, seed));
    }
    return rows;
}

void write_timings_csv(std::ostream& out, std::span<const StageTiming> timings) {
    out << kTimingsCsvHeader << '\n';
    char buf[160];
    for (const auto& t : timings) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.3f,%.1f,%.2f,%llu",
                      t.n_datasets, std::string(stage_name(t.stage)).c_str(), t.wall_ms,
                      t.cpu_pct, t.mem_pct,
                      static_cast<unsigned long long>(t.seed));
        out << buf << '\n';
    }
}

ScenarioResult run_scenario(const QueueScenario& scenario, std::uint64_t seed) {
    ScenarioResult result;
    result.scenario = scenario;
    result.queue = simulate_queue(scenario.interarrival_s, scenario.service_s, scenario.n_jobs,
                                  seed, scenario.arrival_dist, scenario.service_dist);
    result.little_lead_s = little_law(1.0, 1.0 / scenario.service_s);
    // Active time = jobs x mean service.
    const double busy_s = scenario.service_s * static_cast<double>(scenario.n_jobs);
    result.energy_mj = energy_estimate(busy_s, scenario.power);
    return result;
}

nlohmann::ordered_json scenario_json(const ScenarioResult& r) {
    nlohmann::ordered_json j;
    j["name"] = r.scenario.name;
    j["interarrival_s"] = r.scenario.interarrival_s;
    j["service_s"] = r.scenario.service_s;
    j["n_jobs"] = r.scenario.n_jobs;
    j["arrival_dist"] = time_dist_name(r.scenario.arrival_dist);
    j["service_dist"] = time_dist_name(r.scenario.service_dist);
    j["little"] = {{"wip_units", 1.0},
                   {"acr_per_s", 1.0 / r.scenario.service_s},
                   {"lead_time_s", r.little_lead_s}};
    j["queue_stats"] = {{"wip", r.queue.stats.wip},
                        {"acr_per_s", r.queue.stats.acr},
                        {"lead_time_s", r.queue.stats.lead_time_s},
                        {"utilization", r.queue.stats.utilization},
                        {"saturated", r.queue.stats.saturated}};
    j["first_sojourn_s"] = r.queue.sojourn_s.front();
    j["final_sojourn_s"] = r.queue.sojourn_s.back();
    j["power_model"] = r.scenario.power.name;
    j["energy_mj"] = r.energy_mj;
    return j;
}

nlohmann::ordered_json report_json(std::span<const ScenarioResult> scenarios,
                                   const ScalingFit& fit) {
    nlohmann::ordered_json j;
    j["scenarios"] = nlohmann::ordered_json::array();
    for (const auto& s : scenarios) j["scenarios"].push_back(scenario_json(s));
    j["scaling_fit"] = {{"model", scaling_model_name(fit.model)},
                        {"coefficient", fit.coefficient},
                        {"r_squared", fit.r_squared}};
    return j;
}

} // namespace fogpipe::bench
