#include "fogpipe/config.hpp"

#include <fstream>

namespace fogpipe::cli {

namespace {

using nlohmann::json;

std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

[[noreturn]] void type_error(const std::string& path, const char* want, const json& got) {
    throw ConfigError(path, "config key '" + path + "' must be " + want + ", got " +
                                std::string(got.type_name()));
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) type_error(path, "a number", j);
    return j.get<double>();
}

std::uint64_t get_uint(const json& j, const std::string& path) {
    if (!j.is_number_unsigned()) type_error(path, "a non-negative integer", j);
    return j.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) type_error(path, "a string", j);
    return j.get<std::string>();
}

void warn_unknown(const json& obj, const std::string& prefix,
                  std::initializer_list<const char*> known,
                  std::vector<std::string>* warnings) {
    if (!warnings || !obj.is_object()) return;
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) { ok = true; break; }
        if (!ok) warnings->push_back("unknown config key '" + join_path(prefix, key) + "'");
    }
}

signal::FlexSensorSpec parse_sensor(const json& j, const std::string& prefix,
                                    std::vector<std::string>* warnings) {
    signal::FlexSensorSpec s;
    warn_unknown(j, prefix,
                 {"vin_v", "r_fixed_ohm", "r_flat_ohm", "r_bent_ohm", "angle_max_deg",
                  "thickness_mm", "active_fraction"},
                 warnings);
    if (j.contains("vin_v")) s.vin_v = get_number(j["vin_v"], join_path(prefix, "vin_v"));
    if (j.contains("r_fixed_ohm"))
        s.r_fixed_ohm = get_number(j["r_fixed_ohm"], join_path(prefix, "r_fixed_ohm"));
    if (j.contains("r_flat_ohm"))
        s.r_flat_ohm = get_number(j["r_flat_ohm"], join_path(prefix, "r_flat_ohm"));
    if (j.contains("r_bent_ohm"))
        s.r_bent_ohm = get_number(j["r_bent_ohm"], join_path(prefix, "r_bent_ohm"));
    if (j.contains("angle_max_deg"))
        s.angle_max_deg = get_number(j["angle_max_deg"], join_path(prefix, "angle_max_deg"));
    if (j.contains("thickness_mm"))
        s.thickness_mm = get_number(j["thickness_mm"], join_path(prefix, "thickness_mm"));
    if (j.contains("active_fraction"))
        s.active_fraction = get_number(j["active_fraction"], join_path(prefix, "active_fraction"));
    return s;
}

device::GloveConfig parse_glove(const json& j, const std::string& prefix,
                                std::vector<std::string>* warnings) {
    device::GloveConfig g;
    warn_unknown(j, prefix,
                 {"sample_rate_hz", "amplitude_deg", "noise_std_deg", "channels", "sensor"},
                 warnings);
    if (j.contains("sample_rate_hz"))
        g.sample_rate_hz = get_number(j["sample_rate_hz"], join_path(prefix, "sample_rate_hz"));
    if (j.contains("amplitude_deg"))
        g.amplitude_deg = get_number(j["amplitude_deg"], join_path(prefix, "amplitude_deg"));
    if (j.contains("noise_std_deg"))
        g.noise_std_deg = get_number(j["noise_std_deg"], join_path(prefix, "noise_std_deg"));
    if (j.contains("channels")) {
        const auto& arr = j["channels"];
        const auto path = join_path(prefix, "channels");
        if (!arr.is_array() || arr.empty()) type_error(path, "a nonempty array", arr);
        g.channels.clear();
        for (const auto& c : arr) {
            const auto name = get_string(c, path);
            const auto ch = signal::channel_from_name(name);
            if (!ch) throw ConfigError(path, "unknown channel '" + name + "'");
            g.channels.push_back(*ch);
        }
    }
    if (j.contains("sensor"))
        g.sensor = parse_sensor(j["sensor"], join_path(prefix, "sensor"), warnings);
    return g;
}

device::TapProtocol parse_protocol(const json& j, const std::string& prefix,
                                   std::vector<std::string>* warnings) {
    warn_unknown(j, prefix, {"rounds"}, warnings);
    if (!j.contains("rounds")) return device::TapProtocol::default_five_round();
    const auto& arr = j["rounds"];
    const auto path = join_path(prefix, "rounds");
    if (!arr.is_array()) type_error(path, "an array", arr);
    device::TapProtocol p;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& r = arr[i];
        const auto rp = path + "[" + std::to_string(i) + "]";
        warn_unknown(r, rp, {"duration_s", "freq_start_hz", "freq_end_hz", "label"}, warnings);
        device::Round round;
        if (!r.contains("duration_s")) throw ConfigError(rp + ".duration_s", "round needs duration_s");
        round.duration_s = get_number(r["duration_s"], rp + ".duration_s");
        if (r.contains("freq_start_hz"))
            round.freq_start_hz = get_number(r["freq_start_hz"], rp + ".freq_start_hz");
        if (r.contains("freq_end_hz"))
            round.freq_end_hz = get_number(r["freq_end_hz"], rp + ".freq_end_hz");
        else
            round.freq_end_hz = round.freq_start_hz;
        round.label = r.contains("label") ? get_string(r["label"], rp + ".label")
                                          : "round" + std::to_string(i + 1);
        p.rounds.push_back(std::move(round));
    }
    return p;
}

mesh::LinkModel parse_link(const json& j, const std::string& prefix,
                           std::vector<std::string>* warnings) {
    mesh::LinkModel l;
    warn_unknown(j, prefix, {"latency_s", "loss_prob", "capacity_bps"}, warnings);
    if (j.contains("latency_s")) l.latency_s = get_number(j["latency_s"], join_path(prefix, "latency_s"));
    if (j.contains("loss_prob")) l.loss_prob = get_number(j["loss_prob"], join_path(prefix, "loss_prob"));
    if (j.contains("capacity_bps"))
        l.capacity_bps = get_number(j["capacity_bps"], join_path(prefix, "capacity_bps"));
    l.validate();
    return l;
}

bench::PowerModel parse_power(const json& j, const std::string& path) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "pi") return bench::pi_power();
        if (name == "edison") return bench::edison_power();
        throw ConfigError(path, "unknown power model '" + name + "' (use pi, edison, or an object)");
    }
    if (j.is_object() && j.contains("name") && j.contains("active_mw"))
        return {get_string(j["name"], path + ".name"),
                get_number(j["active_mw"], path + ".active_mw")};
    type_error(path, "\"pi\", \"edison\", or {name, active_mw}", j);
}

bench::QueueScenario parse_scenario(const json& j, const std::string& path,
                                    std::vector<std::string>* warnings) {
    warn_unknown(j, path,
                 {"name", "interarrival_s", "service_s", "n_jobs", "arrival_dist",
                  "service_dist", "power"},
                 warnings);
    bench::QueueScenario s;
    if (!j.contains("name")) throw ConfigError(path + ".name", "scenario needs a name");
    s.name = get_string(j["name"], path + ".name");
    if (j.contains("interarrival_s"))
        s.interarrival_s = get_number(j["interarrival_s"], path + ".interarrival_s");
    if (j.contains("service_s")) s.service_s = get_number(j["service_s"], path + ".service_s");
    if (j.contains("n_jobs"))
        s.n_jobs = static_cast<std::size_t>(get_uint(j["n_jobs"], path + ".n_jobs"));
    for (const auto& [key, member] :
         {std::pair{"arrival_dist", &s.arrival_dist}, {"service_dist", &s.service_dist}}) {
        if (!j.contains(key)) continue;
        const auto name = get_string(j[key], path + "." + key);
        const auto dist = bench::time_dist_from_name(name);
        if (!dist) throw ConfigError(path + "." + key, "unknown distribution '" + name + "'");
        *member = *dist;
    }
    if (j.contains("power")) s.power = parse_power(j["power"], path + ".power");
    return s;
}

} // namespace

std::vector<bench::QueueScenario> default_scenarios() {
    bench::QueueScenario pi;
    pi.name = "pi";
    pi.service_s = 12.39;
    pi.power = bench::pi_power();
    bench::QueueScenario edison;
    edison.name = "edison";
    edison.service_s = 64.65;
    edison.power = bench::edison_power();
    return {pi, edison};
}

RunConfig parse_config_json(const nlohmann::json& doc, std::vector<std::string>* warnings) {
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
    warn_unknown(doc, "",
                 {"seed", "out_dir", "devices", "topology", "trickle", "gateway", "sink",
                  "replay", "bench"},
                 warnings);

    RunConfig cfg;
    if (!doc.contains("seed"))
        throw ConfigError("seed", "missing required key: seed (runs must be reproducible)");
    cfg.seed = get_uint(doc["seed"], "seed");
    if (doc.contains("out_dir")) cfg.out_dir = get_string(doc["out_dir"], "out_dir");

    if (doc.contains("devices")) {
        const auto& d = doc["devices"];
        warn_unknown(d, "devices", {"count", "batch_n", "glove", "protocol"}, warnings);
        if (d.contains("count")) {
            cfg.device_count = static_cast<std::size_t>(get_uint(d["count"], "devices.count"));
            if (cfg.device_count < 1)
                throw ConfigError("devices.count", "device count must be >= 1");
        }
        if (d.contains("batch_n")) {
            cfg.batch_n = static_cast<std::size_t>(get_uint(d["batch_n"], "devices.batch_n"));
            if (cfg.batch_n < 1) throw ConfigError("devices.batch_n", "batch_n must be >= 1");
        }
        if (d.contains("glove")) cfg.glove = parse_glove(d["glove"], "devices.glove", warnings);
        if (d.contains("protocol"))
            cfg.protocol = parse_protocol(d["protocol"], "devices.protocol", warnings);
    }

    if (doc.contains("topology")) {
        const auto& t = doc["topology"];
        warn_unknown(t, "topology", {"file", "relays", "extra_edge_prob", "link"}, warnings);
        if (t.contains("file") && !t["file"].is_null()) {
            cfg.topology.file = std::filesystem::path(get_string(t["file"], "topology.file"));
            if (!std::filesystem::exists(*cfg.topology.file))
                throw ConfigError("topology.file",
                                  "topology file not found: " + cfg.topology.file->string());
        }
        if (t.contains("relays"))
            cfg.topology.relays = static_cast<std::size_t>(get_uint(t["relays"], "topology.relays"));
        if (t.contains("extra_edge_prob"))
            cfg.topology.extra_edge_prob =
                get_number(t["extra_edge_prob"], "topology.extra_edge_prob");
        if (t.contains("link")) cfg.topology.link = parse_link(t["link"], "topology.link", warnings);
    }

    if (doc.contains("trickle")) {
        const auto& t = doc["trickle"];
        warn_unknown(t, "trickle", {"i_min_s", "i_doublings", "k"}, warnings);
        if (t.contains("i_min_s")) cfg.trickle.i_min_s = get_number(t["i_min_s"], "trickle.i_min_s");
        if (t.contains("i_doublings"))
            cfg.trickle.i_doublings =
                static_cast<int>(get_uint(t["i_doublings"], "trickle.i_doublings"));
        if (t.contains("k")) cfg.trickle.k = static_cast<int>(get_uint(t["k"], "trickle.k"));
        cfg.trickle.validate();
    }

    if (doc.contains("gateway")) {
        const auto& g = doc["gateway"];
        warn_unknown(g, "gateway", {"capacity", "reorder_window", "policy", "signal"}, warnings);
        if (g.contains("capacity")) {
            cfg.gateway.capacity =
                static_cast<std::size_t>(get_uint(g["capacity"], "gateway.capacity"));
            if (cfg.gateway.capacity < 1)
                throw ConfigError("gateway.capacity", "capacity must be >= 1");
        }
        if (g.contains("reorder_window"))
            cfg.gateway.reorder_window = get_uint(g["reorder_window"], "gateway.reorder_window");
        if (g.contains("policy")) {
            const auto& p = g["policy"];
            warn_unknown(p, "gateway.policy", {"mode", "alert_freq_floor_hz"}, warnings);
            if (p.contains("mode")) {
                const auto name = get_string(p["mode"], "gateway.policy.mode");
                const auto mode = gateway::policy_mode_from_name(name);
                if (!mode)
                    throw ConfigError("gateway.policy.mode", "unknown policy mode '" + name + "'");
                cfg.gateway.policy.mode = *mode;
            }
            if (p.contains("alert_freq_floor_hz"))
                cfg.gateway.policy.alert_freq_floor_hz =
                    get_number(p["alert_freq_floor_hz"], "gateway.policy.alert_freq_floor_hz");
        }
        if (g.contains("signal")) {
            const auto& s = g["signal"];
            warn_unknown(s, "gateway.signal",
                         {"threshold_deg", "min_gap_s", "window_s", "hop_s", "smooth_window_n",
                          "clip_max_deg"},
                         warnings);
            auto& a = cfg.gateway.analysis;
            if (s.contains("threshold_deg"))
                a.threshold_deg = get_number(s["threshold_deg"], "gateway.signal.threshold_deg");
            if (s.contains("min_gap_s"))
                a.min_gap_s = get_number(s["min_gap_s"], "gateway.signal.min_gap_s");
            if (s.contains("window_s"))
                a.window_s = get_number(s["window_s"], "gateway.signal.window_s");
            if (s.contains("hop_s")) a.hop_s = get_number(s["hop_s"], "gateway.signal.hop_s");
            if (s.contains("smooth_window_n"))
                a.conditioning.smooth_window_n =
                    static_cast<int>(get_uint(s["smooth_window_n"], "gateway.signal.smooth_window_n"));
            if (s.contains("clip_max_deg"))
                a.conditioning.clip_max_deg =
                    get_number(s["clip_max_deg"], "gateway.signal.clip_max_deg");
        }
    }
    // The gateway decodes with the same sensor model the gloves encode with.
    cfg.gateway.sensor = cfg.glove.sensor;

    if (doc.contains("sink")) {
        const auto& s = doc["sink"];
        warn_unknown(s, "sink", {"host", "port", "duration_s", "log"}, warnings);
        if (s.contains("host")) cfg.sink_host = get_string(s["host"], "sink.host");
        if (s.contains("port")) {
            const auto port = get_uint(s["port"], "sink.port");
            if (port > 65535) throw ConfigError("sink.port", "port must be <= 65535");
            cfg.sink_port = static_cast<std::uint16_t>(port);
        }
        if (s.contains("duration_s"))
            cfg.sink_duration_s = get_number(s["duration_s"], "sink.duration_s");
        if (s.contains("log")) cfg.sink_log = std::filesystem::path(get_string(s["log"], "sink.log"));
    }

    if (doc.contains("replay")) {
        const auto& r = doc["replay"];
        warn_unknown(r, "replay", {"trace", "device_id"}, warnings);
        if (r.contains("trace") && !r["trace"].is_null()) {
            cfg.replay_trace = std::filesystem::path(get_string(r["trace"], "replay.trace"));
            if (!std::filesystem::exists(*cfg.replay_trace))
                throw ConfigError("replay.trace",
                                  "trace file not found: " + cfg.replay_trace->string());
        }
        if (r.contains("device_id"))
            cfg.replay_device_id = get_string(r["device_id"], "replay.device_id");
    }

    cfg.bench.scenarios = default_scenarios();
    if (doc.contains("bench")) {
        const auto& b = doc["bench"];
        warn_unknown(b, "bench", {"scenarios", "profile_sizes"}, warnings);
        if (b.contains("scenarios")) {
            const auto& arr = b["scenarios"];
            if (!arr.is_array()) type_error("bench.scenarios", "an array", arr);
            cfg.bench.scenarios.clear();
            for (std::size_t i = 0; i < arr.size(); ++i)
                cfg.bench.scenarios.push_back(parse_scenario(
                    arr[i], "bench.scenarios[" + std::to_string(i) + "]", warnings));
        }
        if (b.contains("profile_sizes")) {
            const auto& arr = b["profile_sizes"];
            if (!arr.is_array() || arr.empty())
                type_error("bench.profile_sizes", "a nonempty array", arr);
            cfg.bench.profile_sizes.clear();
            for (const auto& v : arr)
                cfg.bench.profile_sizes.push_back(
                    static_cast<std::size_t>(get_uint(v, "bench.profile_sizes[]")));
        }
    }

    // Cross-field validation; throws ConfigError with the offending key.
    cfg.glove.validate(cfg.protocol);
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    return parse_config_json(doc, warnings);
}

void apply_override(nlohmann::json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override must look like key.path=value, got '" +
                          std::string(assignment) + "'");
    const std::string value_text(assignment.substr(eq + 1));

    nlohmann::json value;
    try {
        value = nlohmann::json::parse(value_text);
    } catch (const nlohmann::json::exception&) {
        value = value_text; // not JSON, keep it as a string
    }

    nlohmann::json* node = &doc;
    std::string_view path = assignment.substr(0, eq);
    while (true) {
        const auto dot = path.find('.');
        const std::string key(path.substr(0, dot));
        if (key.empty())
            throw ConfigError("override has an empty key segment: '" +
                              std::string(assignment) + "'");
        if (dot == std::string_view::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        path = path.substr(dot + 1);
    }
}

} // namespace fogpipe::cli
