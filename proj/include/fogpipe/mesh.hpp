#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fogpipe/errors.hpp"

namespace fogpipe::mesh {

using NodeId = std::string;

// Per-edge link characteristics. Capacity defaults to the 25 Mbps class of
// short-range radio links this layer stands in for.
struct LinkModel {
    double latency_s = 0.001;
    double loss_prob = 0.0;
    double capacity_bps = 25'000'000.0;

    void validate() const;
};

// Undirected mesh with per-edge link models. Node iteration order is sorted,
// which keeps every simulation over the graph reproducible.
class TopologyGraph {
public:
    void add_node(const NodeId& id);
    void add_edge(const NodeId& a, const NodeId& b, const LinkModel& link = {});

    bool has_node(const NodeId& id) const;
    bool has_edge(const NodeId& a, const NodeId& b) const;
    const LinkModel& link(const NodeId& a, const NodeId& b) const; // RouteError if absent
    const std::set<NodeId>& nodes() const { return nodes_; }
    std::vector<NodeId> neighbors(const NodeId& id) const;
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return links_.size(); }

    // Hop-count shortest path (BFS, sorted tie-break); nullopt if unreachable.
    std::optional<std::vector<NodeId>> shortest_path(const NodeId& from, const NodeId& to) const;

    // {"nodes":[...], "edges":[[a,b],...], "link":{latency_s,loss_prob,capacity_bps}}
    static TopologyGraph from_json(const nlohmann::json& j);
    static TopologyGraph load(const std::filesystem::path& path);
    nlohmann::ordered_json to_json() const;

    // Random spanning tree over the given names plus extra edges with the
    // given probability. Connected by construction, deterministic for a seed.
    static TopologyGraph random_connected(std::span<const NodeId> names, double extra_edge_prob,
                                          std::uint64_t seed, const LinkModel& link = {});

private:
    static std::pair<NodeId, NodeId> edge_key(const NodeId& a, const NodeId& b);

    std::set<NodeId> nodes_;
    std::map<std::pair<NodeId, NodeId>, LinkModel> links_;
    std::map<NodeId, std::set<NodeId>> adjacency_;
};

// Trickle timer parameters; i_max = i_min * 2^i_doublings.
struct TrickleParams {
    double i_min_s = 1.0;
    int i_doublings = 4;
    int k = 1; // redundancy constant

    double i_max_s() const;
    void validate() const;
};

// Per-node timer state. t_fire_s is relative to the current interval start.
struct TrickleState {
    double interval_s = 0.0;
    double t_fire_s = 0.0;
    int c = 0;
    std::uint64_t version = 0;
};

struct IntervalStart {};
struct HeardConsistent {};
struct HeardInconsistent { std::uint64_t version = 0; };
struct TimerFired {};
struct IntervalExpired {};
using TrickleEvent =
    std::variant<IntervalStart, HeardConsistent, HeardInconsistent, TimerFired, IntervalExpired>;

enum class TrickleAction { None, Transmit };

struct TrickleStep {
    TrickleState state;
    TrickleAction action = TrickleAction::None;
};

// Fresh state at the minimum interval with a drawn fire time.
TrickleState trickle_init(const TrickleParams& params, std::uint64_t version,
                          std::mt19937_64& gen);

// One step of the timer rules:
//   IntervalStart     c := 0, redraw t_fire in [I/2, I)
//   HeardConsistent   c += 1
//   HeardInconsistent newer version: adopt it; either way I := i_min and the
//                     interval restarts (a stale sender is an inconsistency too)
//   TimerFired        Transmit iff c < k
//   IntervalExpired   I := min(2I, i_max), restart
// Pure given the rng; the input state is taken by value.
TrickleStep trickle_advance(TrickleState state, const TrickleEvent& event,
                            const TrickleParams& params, std::mt19937_64& gen);

struct DisseminationStats {
    double coverage = 0.0;
    std::uint64_t tx_total = 0;
    std::map<NodeId, std::uint64_t> tx_per_node;
    std::optional<double> convergence_time_s;

    // Diagnostics for invariant checks and reports.
    std::map<NodeId, std::vector<double>> tx_times_per_node;
    std::map<NodeId, std::vector<double>> interval_starts_per_node;
    std::vector<std::pair<double, double>> coverage_timeline; // (t, coverage)
};

// Event-driven Trickle flood of the originator's version over the mesh.
// A transmission reaches each neighbor independently with probability
// (1 - loss_prob) after the edge latency. Deterministic for a fixed seed.
DisseminationStats simulate_dissemination(const TopologyGraph& topology,
                                          const TrickleParams& params,
                                          const NodeId& originator, double duration_s,
                                          std::uint64_t seed);

struct DeliveryOutcome {
    bool delivered = false;
    double latency_s = 0.0;
};

// Source-routed unicast: per hop the packet survives with probability
// (1 - loss_prob) and pays latency_s + packet_bits / capacity_bps.
DeliveryOutcome deliver_data(const TopologyGraph& topology, std::span<const NodeId> route,
                             std::uint64_t packet_bits, std::mt19937_64& gen);
DeliveryOutcome deliver_data(const TopologyGraph& topology, std::span<const NodeId> route,
                             std::uint64_t packet_bits, std::uint64_t seed);

} // namespace fogpipe::mesh
