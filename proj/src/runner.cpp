#include "fogpipe/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <span>
#include <thread>

#include "fogpipe/rng.hpp"
#include "fogpipe/sink_server.hpp"

namespace fogpipe::cli {

namespace {

std::string device_name(std::size_t i) { return "glove" + std::to_string(i); }

// Topology for a run: a generated relay core (or none) with every glove node
// attached; all data routes lead to "gateway".
mesh::TopologyGraph build_topology(const RunConfig& cfg) {
    if (cfg.topology.file) {
        auto g = mesh::TopologyGraph::load(*cfg.topology.file);
        if (!g.has_node("gateway"))
            throw ConfigError("topology.file", "topology must contain a 'gateway' node");
        for (std::size_t i = 0; i < cfg.device_count; ++i)
            if (!g.has_node(device_name(i)))
                throw ConfigError("topology.file",
                                  "topology is missing node '" + device_name(i) + "'");
        return g;
    }

    std::vector<mesh::NodeId> core{"gateway"};
    for (std::size_t i = 0; i < cfg.topology.relays; ++i)
        core.push_back("relay" + std::to_string(i));
    auto g = mesh::TopologyGraph::random_connected(core, cfg.topology.extra_edge_prob,
                                                   rng::derive_seed(cfg.seed, "topology"),
                                                   cfg.topology.link);
    std::mt19937_64 attach(rng::derive_seed(cfg.seed, "topology/attach"));
    for (std::size_t i = 0; i < cfg.device_count; ++i) {
        const auto& target =
            core[static_cast<std::size_t>(rng::uniform01(attach) * static_cast<double>(core.size())) %
                 core.size()];
        g.add_node(device_name(i));
        g.add_edge(device_name(i), target, cfg.topology.link);
    }
    return g;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PersistError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw PersistError("write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

std::string freq_str(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct SessionOutcome {
    gateway::SessionSummary summary;
    std::uint64_t raw_bytes = 0;
    std::uint64_t forwarded_bytes = 0;
    bool flagged = false;
    std::uint64_t gap_count = 0;
};

nlohmann::ordered_json session_json(const SessionOutcome& s) {
    nlohmann::ordered_json j;
    j["session_id"] = s.summary.session_id;
    j["device_id"] = s.summary.device_id;
    j["duration_s"] = s.summary.duration_s;
    j["total_taps"] = s.summary.total_taps;
    j["raw_bytes"] = s.raw_bytes;
    j["forwarded_bytes"] = s.forwarded_bytes;
    j["forward_ratio"] =
        s.raw_bytes > 0 ? static_cast<double>(s.forwarded_bytes) / static_cast<double>(s.raw_bytes)
                        : 0.0;
    j["flagged"] = s.flagged;
    j["gap_count"] = s.gap_count;
    auto rounds = nlohmann::ordered_json::array();
    for (const auto& r : s.summary.rounds)
        rounds.push_back({{"label", r.label},
                          {"mean_freq_hz", r.mean_freq_hz},
                          {"max_freq_hz", r.max_freq_hz},
                          {"tap_count", r.tap_count}});
    j["rounds"] = std::move(rounds);
    return j;
}

void write_rounds_csv(const std::filesystem::path& path,
                      std::span<const SessionOutcome> sessions) {
    std::string csv = "device_id,session_id,round,label,mean_freq_hz,max_freq_hz,tap_count\n";
    for (const auto& s : sessions) {
        for (std::size_t i = 0; i < s.summary.rounds.size(); ++i) {
            const auto& r = s.summary.rounds[i];
            csv += s.summary.device_id + "," + s.summary.session_id + "," +
                   std::to_string(i + 1) + "," + r.label + "," + freq_str(r.mean_freq_hz) +
                   "," + freq_str(r.max_freq_hz) + "," + std::to_string(r.tap_count) + "\n";
        }
    }
    write_text_file(path, csv);
}

// Closes every open device session in id order, forwards the frames over the
// client connection (connection-level seq numbering), and collects outcomes.
std::vector<SessionOutcome> close_and_forward(gateway::Gateway& gw,
                                              const RunConfig& cfg,
                                              std::span<const std::string> device_ids,
                                              cloud::SinkClient& client) {
    std::vector<SessionOutcome> outcomes;
    std::uint64_t connection_seq = 0;
    for (const auto& id : device_ids) {
        const auto session_id = gw.open_session_id(id);
        SessionOutcome out;
        out.summary = gw.close_session(session_id, cfg.protocol);
        auto frames = gw.forward_frames(session_id);
        for (auto& f : frames) {
            f.seq = connection_seq++;
            out.forwarded_bytes += cloud::encode_frame(f).size();
            const auto ack = client.send(f);
            if (ack.seq != f.seq || ack.payload.contains("error"))
                throw PersistError("sink rejected frame seq " + std::to_string(f.seq));
        }
        if (const auto record = gw.store().find(session_id)) {
            out.raw_bytes = record->raw_bytes_received;
            out.flagged = record->flagged;
            out.gap_count = record->gap_count;
        }
        outcomes.push_back(std::move(out));
    }
    return outcomes;
}

nlohmann::ordered_json totals_json(std::span<const SessionOutcome> sessions) {
    std::uint64_t raw = 0;
    std::uint64_t fwd = 0;
    for (const auto& s : sessions) {
        raw += s.raw_bytes;
        fwd += s.forwarded_bytes;
    }
    return {{"raw_bytes", raw},
            {"forwarded_bytes", fwd},
            {"forward_ratio", raw > 0 ? static_cast<double>(fwd) / static_cast<double>(raw) : 0.0}};
}

std::filesystem::path fresh_log_path(const RunConfig& cfg) {
    const auto path = cfg.sink_log.value_or(cfg.out_dir / "longterm.jsonl");
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::filesystem::remove(path); // a run starts its log from scratch
    return path;
}

} // namespace

void run_simulate(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const auto topology = build_topology(config);

    // Per-device synthesis and packetization.
    struct Flight {
        double send_s = 0.0;
        std::size_t device = 0;
        device::SamplePacket packet;
    };
    std::vector<Flight> flights;
    std::vector<std::string> device_ids;
    for (std::size_t i = 0; i < config.device_count; ++i) {
        const auto id = device_name(i);
        device_ids.push_back(id);
        auto glove = config.glove;
        glove.seed = rng::derive_seed(config.seed, "device/" + id);
        const auto stream = device::synth_session(config.protocol, glove);
        for (auto& p : device::packetize(stream, id, config.batch_n))
            flights.push_back({p.sent_at_s, i, std::move(p)});
    }
    std::stable_sort(flights.begin(), flights.end(), [](const Flight& a, const Flight& b) {
        if (a.send_s != b.send_s) return a.send_s < b.send_s;
        if (a.device != b.device) return a.device < b.device;
        return a.packet.seq < b.packet.seq;
    });

    // Data plane: route every packet to the gateway over the lossy mesh.
    std::mt19937_64 mesh_rng(rng::derive_seed(config.seed, "mesh"));
    struct Arrival {
        double at_s = 0.0;
        std::size_t order = 0;
        const device::SamplePacket* packet = nullptr;
    };
    std::vector<Arrival> arrivals;
    std::uint64_t lost = 0;
    double latency_sum = 0.0;
    std::map<std::string, std::vector<mesh::NodeId>> routes;
    for (const auto& id : device_ids) {
        auto path = topology.shortest_path(id, "gateway");
        if (!path)
            throw ConfigError("topology", "node '" + id + "' cannot reach the gateway");
        routes[id] = std::move(*path);
    }
    for (std::size_t i = 0; i < flights.size(); ++i) {
        const auto& f = flights[i];
        const auto bits = 8 * device::packet_wire_bytes(f.packet);
        const auto outcome = mesh::deliver_data(topology, routes[f.packet.device_id],
                                                bits, mesh_rng);
        if (!outcome.delivered) {
            ++lost;
            continue;
        }
        latency_sum += outcome.latency_s;
        arrivals.push_back({f.send_s + outcome.latency_s, i, &f.packet});
    }
    std::stable_sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
        if (a.at_s != b.at_s) return a.at_s < b.at_s;
        return a.order < b.order;
    });

    gateway::Gateway gw(config.gateway);
    std::uint64_t gaps_reported = 0;
    for (const auto& a : arrivals) {
        try {
            gw.ingest_packet(*a.packet);
        } catch (const GapError&) {
            ++gaps_reported; // session flagged; the run report carries it
        }
    }

    // Control plane: spread a config version from the gateway.
    const auto dissemination = mesh::simulate_dissemination(
        topology, config.trickle, "gateway", 10.0 * config.trickle.i_max_s(),
        rng::derive_seed(config.seed, "trickle"));

    // Cloud leg over the real wire.
    cloud::LongTermLog log(fresh_log_path(config));
    cloud::SinkServer server(config.sink_host, config.sink_port, log);
    server.start();
    std::vector<SessionOutcome> sessions;
    {
        cloud::SinkClient client(config.sink_host, server.port());
        sessions = close_and_forward(gw, config, device_ids, client);
    }
    server.stop();

    write_rounds_csv(config.out_dir / "rounds.csv", sessions);

    nlohmann::ordered_json report;
    report["seed"] = config.seed;
    report["devices"] = config.device_count;
    report["sessions"] = nlohmann::ordered_json::array();
    for (const auto& s : sessions) report["sessions"].push_back(session_json(s));
    report["mesh"] = {
        {"nodes", topology.node_count()},
        {"edges", topology.edge_count()},
        {"packets_sent", flights.size()},
        {"packets_delivered", arrivals.size()},
        {"packets_lost", lost},
        {"gaps_reported", gaps_reported},
        {"mean_delivery_latency_s",
         arrivals.empty() ? 0.0 : latency_sum / static_cast<double>(arrivals.size())}};
    report["dissemination"] = {
        {"coverage", dissemination.coverage},
        {"tx_total", dissemination.tx_total},
        {"convergence_time_s", dissemination.convergence_time_s
                                   ? nlohmann::ordered_json(*dissemination.convergence_time_s)
                                   : nlohmann::ordered_json(nullptr)}};
    report["totals"] = totals_json(sessions);
    write_json_file(config.out_dir / "run_report.json", report);
}

namespace {

void replay_through(const RunConfig& config, const std::string& host, std::uint16_t port,
                    cloud::SinkServer* local_server) {
    if (!config.replay_trace)
        throw ConfigError("replay.trace", "replay needs a trace file");
    const auto samples = device::replay_csv(*config.replay_trace);
    if (samples.empty()) throw EmptySessionError("trace holds no samples");

    gateway::Gateway gw(config.gateway);
    for (const auto& p : device::packetize(samples, config.replay_device_id, config.batch_n))
        gw.ingest_packet(p);

    std::vector<std::string> ids{config.replay_device_id};
    std::vector<SessionOutcome> sessions;
    {
        cloud::SinkClient client(host, port);
        sessions = close_and_forward(gw, config, ids, client);
    }
    if (local_server) local_server->stop();

    std::filesystem::create_directories(config.out_dir);
    write_rounds_csv(config.out_dir / "rounds.csv", sessions);
    nlohmann::ordered_json report;
    report["seed"] = config.seed;
    report["trace"] = config.replay_trace->string();
    report["sessions"] = nlohmann::ordered_json::array();
    for (const auto& s : sessions) report["sessions"].push_back(session_json(s));
    report["totals"] = totals_json(sessions);
    write_json_file(config.out_dir / "run_report.json", report);
}

} // namespace

void run_replay(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    cloud::LongTermLog log(fresh_log_path(config));
    cloud::SinkServer server(config.sink_host, config.sink_port, log);
    server.start();
    replay_through(config, config.sink_host, server.port(), &server);
}

void run_gateway(const RunConfig& config) {
    if (config.sink_port == 0)
        throw ConfigError("sink.port", "standalone gateway needs the sink's port");
    replay_through(config, config.sink_host, config.sink_port, nullptr);
}

namespace {
std::atomic<bool> g_sink_interrupted{false};
void sink_signal_handler(int) { g_sink_interrupted.store(true); }
} // namespace

void run_sink(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const auto path = config.sink_log.value_or(config.out_dir / "longterm.jsonl");
    cloud::LongTermLog log(path); // standalone sink appends across restarts
    cloud::SinkServer server(config.sink_host, config.sink_port, log);
    server.start();
    std::cout << "sink listening on " << config.sink_host << ":" << server.port()
              << " log " << path.string() << "\n"
              << std::flush;

    if (config.sink_duration_s > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(config.sink_duration_s));
    } else {
        g_sink_interrupted.store(false);
        std::signal(SIGINT, sink_signal_handler);
        std::signal(SIGTERM, sink_signal_handler);
        while (!g_sink_interrupted.load())
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.stop();
    std::cout << "sink persisted " << log.record_count() << " records\n";
}

void run_bench(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);

    std::vector<bench::ScenarioResult> results;
    for (const auto& scenario : config.bench.scenarios)
        results.push_back(
            bench::run_scenario(scenario, rng::derive_seed(config.seed, "bench/" + scenario.name)));

    const auto timings =
        bench::profile_pipeline(config.bench.profile_sizes,
                                rng::derive_seed(config.seed, "bench/profile"));
    {
        std::ofstream csv(config.out_dir / "bench.csv", std::ios::binary);
        if (!csv) throw PersistError("cannot write bench.csv");
        bench::write_timings_csv(csv, timings);
    }

    std::vector<std::pair<double, double>> totals;
    for (const auto& t : timings)
        if (t.stage == bench::Stage::Total)
            totals.emplace_back(static_cast<double>(t.n_datasets), t.wall_ms);
    const auto fit = bench::fit_scaling(totals);

    write_json_file(config.out_dir / "bench_report.json", bench::report_json(results, fit));
}

} // namespace fogpipe::cli
