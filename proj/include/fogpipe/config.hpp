#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogpipe/bench.hpp"
#include "fogpipe/device.hpp"
#include "fogpipe/gateway.hpp"
#include "fogpipe/mesh.hpp"

namespace fogpipe::cli {

// Mesh layout for a run: either a topology file or a generated core of relay
// nodes; glove nodes always attach to the core (or straight to the gateway).
struct TopologySpec {
    std::optional<std::filesystem::path> file;
    std::size_t relays = 0;
    double extra_edge_prob = 0.3;
    mesh::LinkModel link{};
};

struct BenchSection {
    std::vector<bench::QueueScenario> scenarios;
    std::vector<std::size_t> profile_sizes{1, 2, 4, 8, 16};
};

struct RunConfig {
    std::uint64_t seed = 0; // required in the file; no wall-clock seeding
    std::filesystem::path out_dir = "out";

    std::size_t device_count = 1;
    std::size_t batch_n = 25;
    device::GloveConfig glove{};
    device::TapProtocol protocol = device::TapProtocol::default_five_round();

    TopologySpec topology{};
    mesh::TrickleParams trickle{};
    gateway::GatewayConfig gateway{};

    std::string sink_host = "127.0.0.1";
    std::uint16_t sink_port = 0; // 0 = ephemeral
    double sink_duration_s = 0.0;
    std::optional<std::filesystem::path> sink_log;

    std::optional<std::filesystem::path> replay_trace;
    std::string replay_device_id = "glove0";

    BenchSection bench{};
};

// The two canned queue scenarios (arrival once per minute; the two fog-board
// service figures).
std::vector<bench::QueueScenario> default_scenarios();

// Parses and fully validates a config document. Missing required keys and
// type mismatches throw ConfigError carrying the dotted key path; unknown
// keys are collected into `warnings`.
RunConfig parse_config_json(const nlohmann::json& doc,
                            std::vector<std::string>* warnings = nullptr);
RunConfig parse_config(const std::filesystem::path& path,
                       std::vector<std::string>* warnings = nullptr);

// Applies one "--key.path=value" style override onto a raw JSON document.
// The value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

} // namespace fogpipe::cli
