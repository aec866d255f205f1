// Acceptance suite: every criterion prints one PASS/FAIL line; the exit code
// is the number of failures. CLI-level criteria drive the real binary.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogpipe/bench.hpp"
#include "fogpipe/cloud.hpp"
#include "fogpipe/device.hpp"
#include "fogpipe/gateway.hpp"
#include "fogpipe/mesh.hpp"
#include "fogpipe/rng.hpp"
#include "fogpipe/signal.hpp"
#include "fogpipe/sink_server.hpp"

namespace fs = std::filesystem;
using namespace fogpipe;

namespace {

struct Check {
    std::string label;
    std::function<void()> body;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FOGPIPE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("fogpipe_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr std::uint64_t kSeed = 42;

// --- 1. five-round ordinal structure ----------------------------------------

void criterion_fig3_ordinal() {
    const auto dir = scratch("fig3");
    std::ofstream(dir / "config.json") << R"({"seed": 42})";
    const auto t0 = std::chrono::steady_clock::now();
    expect(run_cli("simulate --config " + (dir / "config.json").string() + " --out " +
                   (dir / "out").string()) == 0,
           "simulate exited nonzero");
    const double elapsed = seconds_since(t0);
    expect(elapsed < 10.0, "simulate took " + std::to_string(elapsed) + " s (limit 10)");

    const auto report = nlohmann::json::parse(slurp(dir / "out" / "run_report.json"));
    const auto& rounds = report["sessions"][0]["rounds"];
    expect(rounds.size() == 5, "expected 5 rounds in the summary");
    const double f1 = rounds[0]["mean_freq_hz"].get<double>();
    const double f2 = rounds[1]["mean_freq_hz"].get<double>();
    const double f3 = rounds[2]["mean_freq_hz"].get<double>();
    const double f4 = rounds[3]["mean_freq_hz"].get<double>();
    expect(std::abs(f1 - f2) <= 0.2, "round 1 and 2 should match within 0.2 Hz");
    expect(f2 < f3, "round 3 must be faster than round 2");
    expect(f3 < f4, "round 4 must be faster than round 3");

    // Round-5 windowed profile, recomputed through the same deterministic
    // pipeline the run used.
    const auto protocol = device::TapProtocol::default_five_round();
    device::GloveConfig glove;
    glove.seed = rng::derive_seed(kSeed, "device/glove0");
    const auto stream = device::synth_session(protocol, glove);
    gateway::GatewayConfig gw_cfg;
    signal::AngleSeries series;
    series.channel = signal::Channel::Index;
    for (const auto& s : stream) {
        if (s.channel != signal::Channel::Index) continue;
        series.samples.push_back(
            {s.t_s, signal::resistance_to_angle(signal::voltage_to_resistance(s, glove.sensor),
                                                glove.sensor)});
    }
    const auto conditioned =
        signal::condition_series(series, gw_cfg.analysis.conditioning);
    const auto events = signal::detect_taps(conditioned, gw_cfg.analysis.threshold_deg,
                                            gw_cfg.analysis.min_gap_s);
    std::vector<signal::TapEvent> round5;
    for (const auto& e : events)
        if (e.t_peak_s >= 40.0 && e.t_peak_s < 50.0)
            round5.push_back({e.t_peak_s - 40.0, e.amplitude_deg, e.channel});
    const auto profile = signal::tap_frequency_profile(round5, 10.0, gw_cfg.analysis.window_s,
                                                       gw_cfg.analysis.hop_s);
    expect(!profile.points.empty(), "round-5 profile is empty");
    int violations = 0;
    for (std::size_t i = 1; i < profile.points.size(); ++i) {
        const double drop = profile.points[i - 1].freq_hz - profile.points[i].freq_hz;
        if (drop > 1e-9) {
            ++violations;
            expect(drop <= 0.25, "round-5 profile drops by " + std::to_string(drop) + " Hz");
        }
    }
    expect(violations <= 1, "round-5 profile violates monotonicity more than once");
}

// --- 2. canned queue scenarios ----------------------------------------------

void criterion_little_law_scenarios() {
    const auto dir = scratch("bench");
    std::ofstream(dir / "config.json") << R"({"seed": 42})";
    const auto t0 = std::chrono::steady_clock::now();
    expect(run_cli("bench --config " + (dir / "config.json").string() + " --out " +
                   (dir / "out").string()) == 0,
           "bench exited nonzero");
    const double elapsed = seconds_since(t0);
    expect(elapsed < 5.0, "bench took " + std::to_string(elapsed) + " s (limit 5)");

    const auto report = nlohmann::json::parse(slurp(dir / "out" / "bench_report.json"));
    const auto& scenarios = report["scenarios"];
    expect(scenarios.size() == 2, "expected the two canned scenarios");

    const auto& pi = scenarios[0];
    expect(pi["name"] == "pi", "first scenario should be pi");
    const double pi_lead = pi["queue_stats"]["lead_time_s"].get<double>();
    expect(std::abs(pi_lead - 12.39) <= 0.01 * 12.39, "pi lead time off by more than 1%");
    expect(pi["queue_stats"]["saturated"] == false, "pi scenario must not saturate");

    const auto& edison = scenarios[1];
    expect(edison["queue_stats"]["saturated"] == true, "edison scenario must saturate");
    const double first = edison["first_sojourn_s"].get<double>();
    const double last = edison["final_sojourn_s"].get<double>();
    expect(last > 5.0 * first, "edison queue did not grow 5x over 200 jobs");
    expect(std::abs(edison["little"]["lead_time_s"].get<double>() - 64.65) < 1e-9,
           "edison analytic lead time should be 64.65 s");
}

// --- 3. internal flow identity ----------------------------------------------

void criterion_littles_identity() {
    const auto r = bench::simulate_queue(2.0, 1.0, 10000, 42, bench::TimeDist::Exponential,
                                         bench::TimeDist::Exponential);
    const double predicted = r.stats.acr * r.stats.lead_time_s;
    expect(std::abs(r.stats.wip - predicted) <= 0.01 * r.stats.wip,
           "WIP vs ACR x lead time differ by more than 1%");
}

// --- 4. bandwidth conservation ----------------------------------------------

void criterion_bandwidth() {
    device::TapProtocol protocol{{{120.0, 1.0, 1.0, "r1"},
                                  {120.0, 1.0, 1.0, "r2"},
                                  {120.0, 2.0, 2.0, "r3"},
                                  {120.0, 3.5, 3.5, "r4"},
                                  {120.0, 1.0, 3.5, "r5"}}};
    device::GloveConfig glove; // 50 Hz, both channels
    glove.seed = rng::derive_seed(kSeed, "bandwidth");
    gateway::Gateway gw(gateway::GatewayConfig{});
    for (const auto& p : device::packetize(device::synth_session(protocol, glove), "glove", 25))
        gw.ingest_packet(p);
    const auto summary = gw.close_session("glove-s0", protocol);
    expect(summary.total_taps > 0, "session detected no taps");
    const auto frames = gw.forward_frames("glove-s0");
    const auto record = gw.store().find("glove-s0");
    expect(record != nullptr, "record missing from store");
    const auto forwarded = gateway::total_wire_bytes(frames);
    expect(forwarded * 20 <= record->raw_bytes_received,
           "forwarded " + std::to_string(forwarded) + " B exceeds 5% of " +
               std::to_string(record->raw_bytes_received) + " B raw");
}

// --- 5. trickle dissemination -----------------------------------------------

void criterion_trickle() {
    const auto t0 = std::chrono::steady_clock::now();
    mesh::TrickleParams params{}; // i_min 1 s, 4 doublings, k 1

    std::vector<mesh::NodeId> names;
    for (int i = 0; i < 20; ++i) names.push_back("n" + std::to_string(i));
    const auto g = mesh::TopologyGraph::random_connected(names, 0.15, kSeed, {});
    const double duration = 10.0 * params.i_max_s();
    const auto stats = mesh::simulate_dissemination(g, params, "n0", duration, kSeed);
    expect(stats.coverage == 1.0, "coverage did not reach 1.0 within 10 i_max");

    for (const auto& [node, starts] : stats.interval_starts_per_node) {
        const auto& txs = stats.tx_times_per_node.at(node);
        for (std::size_t i = 0; i < starts.size(); ++i) {
            const double lo = starts[i];
            const double hi = i + 1 < starts.size() ? starts[i + 1] : duration;
            std::size_t count = 0;
            for (double t : txs)
                if (t >= lo && t < hi) ++count;
            expect(count <= 1, "node " + node + " transmitted twice in one interval");
        }
    }

    // Clique suppression after convergence.
    mesh::TopologyGraph clique;
    std::vector<mesh::NodeId> cn;
    for (int i = 0; i < 10; ++i) {
        cn.push_back("c" + std::to_string(i));
        clique.add_node(cn.back());
    }
    for (std::size_t i = 0; i < cn.size(); ++i)
        for (std::size_t j = i + 1; j < cn.size(); ++j) clique.add_edge(cn[i], cn[j], {});
    const double settle = 4.0 * params.i_max_s();
    const double window = 50.0 * params.i_max_s();
    const auto cstats =
        mesh::simulate_dissemination(clique, params, "c0", settle + window, kSeed + 1);
    expect(cstats.coverage == 1.0, "clique did not converge");
    std::size_t tx_in_window = 0;
    for (const auto& [node, txs] : cstats.tx_times_per_node)
        for (double t : txs)
            if (t >= settle) ++tx_in_window;
    const double per_interval = static_cast<double>(tx_in_window) / 50.0;
    expect(per_interval < 10.0, "clique averages " + std::to_string(per_interval) +
                                    " tx per interval (limit 10)");

    const double elapsed = seconds_since(t0);
    expect(elapsed < 5.0, "trickle checks took " + std::to_string(elapsed) + " s (limit 5)");
}

// --- 6. scaling fit and profiling schema ------------------------------------

void criterion_scaling() {
    std::vector<std::pair<double, double>> pts;
    for (double n : {2.0, 4.0, 8.0, 16.0}) pts.emplace_back(n, 3.0 * n * std::log(n));
    const auto fit = bench::fit_scaling(pts);
    expect(fit.model == bench::ScalingModel::NLogN, "fit did not pick n log n");
    expect(fit.r_squared >= 0.99, "fit r^2 below 0.99");

    const std::vector<std::size_t> sizes{1, 2, 4, 8, 16};
    const auto rows = bench::profile_pipeline(sizes, kSeed);
    std::ostringstream out;
    bench::write_timings_csv(out, rows);
    const auto csv = out.str();

    std::istringstream lines(csv);
    std::string line;
    expect(std::getline(lines, line) &&
               line == "n_datasets,stage,wall_ms,cpu_pct,mem_pct,seed",
           "CSV header differs from the golden schema");
    const char* stages[] = {"load", "condition", "analyze", "transmit", "total"};
    std::size_t row = 0;
    while (std::getline(lines, line)) {
        const auto n = sizes[row / 5];
        const std::string prefix = std::to_string(n) + "," + stages[row % 5] + ",";
        expect(line.rfind(prefix, 0) == 0,
               "row " + std::to_string(row) + " should start with '" + prefix + "'");
        expect(line.find("," + std::to_string(kSeed)) != std::string::npos,
               "row " + std::to_string(row) + " is missing the seed column");
        ++row;
    }
    expect(row == 25, "expected 25 data rows, got " + std::to_string(row));
}

// --- 7. codec and persistence -----------------------------------------------

void criterion_codec_persistence() {
    // 1000 generated frames round-trip bit-exactly.
    std::mt19937_64 gen(kSeed);
    static const char* events[] = {"summary", "alert", "raw", "hello", "ack"};
    for (int i = 0; i < 1000; ++i) {
        cloud::CloudFrame f;
        f.event = events[gen() % 5];
        f.session = "s" + std::to_string(gen() % 100);
        f.seq = gen() % 1000000;
        if (gen() % 2) f.payload["value"] = rng::uniform(gen, -1000.0, 1000.0);
        if (gen() % 3) f.payload["text"] = "msg-" + std::to_string(gen() % 50);
        const auto bytes = cloud::encode_frame(f);
        const auto back = cloud::decode_frame(bytes);
        expect(back == f, "frame round-trip mismatch at iteration " + std::to_string(i));
        expect(cloud::encode_frame(back) == bytes, "re-encode differs from the original bytes");
    }

    // Canonical ack frame against its hand-derived byte string.
    cloud::CloudFrame ack;
    ack.event = "ack";
    ack.session = "s1";
    ack.seq = 0;
    const std::string body = R"({"event":"ack","session":"s1","seq":0,"payload":{}})";
    const auto bytes = cloud::encode_frame(ack);
    expect(bytes.size() == 4 + body.size(), "ack frame length mismatch");
    expect(bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 0 && bytes[3] == body.size(),
           "ack length prefix mismatch");
    expect(std::string(bytes.begin() + 4, bytes.end()) == body, "ack body mismatch");

    // Sink restart mid-run: replaying the log reconstructs every acked frame.
    const auto dir = scratch("persistence");
    const auto log_path = dir / "longterm.jsonl";
    std::vector<cloud::CloudFrame> acked;
    for (int phase = 0; phase < 2; ++phase) {
        cloud::LongTermLog log(log_path);
        cloud::SinkServer server("127.0.0.1", 0, log);
        server.start();
        cloud::SinkClient client("127.0.0.1", server.port());
        for (int i = 0; i < 25; ++i) {
            cloud::CloudFrame f;
            f.event = "summary";
            f.session = "run-" + std::to_string(phase);
            f.seq = static_cast<std::uint64_t>(i);
            f.payload["device_id"] = "glove0";
            f.payload["n"] = phase * 25 + i;
            const auto reply = client.send(f);
            expect(reply.event == "ack" && reply.seq == f.seq, "bad ack during persistence");
            acked.push_back(std::move(f));
        }
        server.stop();
    }
    const auto replayed = cloud::LongTermLog::read_all(log_path);
    expect(replayed.size() == acked.size(), "log record count differs from acked frames");
    for (std::size_t i = 0; i < acked.size(); ++i)
        expect(replayed[i] == acked[i], "replayed frame " + std::to_string(i) + " differs");
}

// --- 8. run determinism -----------------------------------------------------

void criterion_determinism() {
    const auto dir = scratch("determinism");
    std::ofstream(dir / "config.json")
        << R"({"seed": 90125, "devices": {"count": 2}, "topology": {"relays": 3}})";
    expect(run_cli("simulate --config " + (dir / "config.json").string() + " --out " +
                   (dir / "a").string()) == 0,
           "first run failed");
    expect(run_cli("simulate --config " + (dir / "config.json").string() + " --out " +
                   (dir / "b").string()) == 0,
           "second run failed");
    expect(slurp(dir / "a" / "longterm.jsonl") == slurp(dir / "b" / "longterm.jsonl"),
           "long-term logs differ");
    expect(slurp(dir / "a" / "run_report.json") == slurp(dir / "b" / "run_report.json"),
           "run reports differ");
}

} // namespace

int main() {
    const std::vector<Check> checks{
        {"1. five-round ordinal structure (simulate, < 10 s)", criterion_fig3_ordinal},
        {"2. queue scenarios: 12.39 s no-wait / 64.65 s saturated (bench, < 5 s)",
         criterion_little_law_scenarios},
        {"3. flow identity: WIP = ACR x lead time within 1% at rho 0.5",
         criterion_littles_identity},
        {"4. summary-only forwarding <= 5% of raw bytes on a 10-min session",
         criterion_bandwidth},
        {"5. trickle: full coverage, one tx per interval, clique suppression (< 5 s)",
         criterion_trickle},
        {"6. scaling fit recovers n log n; profiling CSV matches the golden schema",
         criterion_scaling},
        {"7. codec round-trip, canonical ack bytes, restart-safe persistence",
         criterion_codec_persistence},
        {"8. identical config and seed give byte-identical artifacts", criterion_determinism},
    };

    int failures = 0;
    for (const auto& c : checks) {
        try {
            c.body();
            std::cout << "PASS  " << c.label << "\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "FAIL  " << c.label << "  [" << e.what() << "]\n";
        }
    }
    std::cout << (failures == 0 ? "ACCEPTANCE: all criteria passed"
                                : "ACCEPTANCE: " + std::to_string(failures) + " criteria failed")
              << "\n";
    return failures;
}
