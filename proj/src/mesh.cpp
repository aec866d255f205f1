#include "fogpipe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "fogpipe/rng.hpp"

namespace fogpipe::mesh {

void LinkModel::validate() const {
    if (latency_s < 0.0) throw ConfigError("link.latency_s", "latency_s must be >= 0");
    if (loss_prob < 0.0 || loss_prob > 1.0)
        throw ConfigError("link.loss_prob", "loss_prob must be in [0, 1]");
    if (capacity_bps <= 0.0) throw ConfigError("link.capacity_bps", "capacity_bps must be > 0");
}

std::pair<NodeId, NodeId> TopologyGraph::edge_key(const NodeId& a, const NodeId& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

void TopologyGraph::add_node(const NodeId& id) {
    nodes_.insert(id);
    adjacency_.try_emplace(id);
}

void TopologyGraph::add_edge(const NodeId& a, const NodeId& b, const LinkModel& link) {
    if (a == b) throw NodeError("self-loop edge on node '" + a + "'");
    if (!has_node(a)) throw NodeError("edge references unknown node '" + a + "'");
    if (!has_node(b)) throw NodeError("edge references unknown node '" + b + "'");
    link.validate();
    links_[edge_key(a, b)] = link;
    adjacency_[a].insert(b);
    adjacency_[b].insert(a);
}

bool TopologyGraph::has_node(const NodeId& id) const { return nodes_.count(id) > 0; }

bool TopologyGraph::has_edge(const NodeId& a, const NodeId& b) const {
    return links_.count(edge_key(a, b)) > 0;
}

const LinkModel& TopologyGraph::link(const NodeId& a, const NodeId& b) const {
    auto it = links_.find(edge_key(a, b));
    if (it == links_.end())
        throw RouteError("no edge between '" + a + "' and '" + b + "'");
    return it->second;
}

std::vector<NodeId> TopologyGraph::neighbors(const NodeId& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw NodeError("unknown node '" + id + "'");
    return {it->second.begin(), it->second.end()};
}

std::optional<std::vector<NodeId>> TopologyGraph::shortest_path(const NodeId& from,
                                                                const NodeId& to) const {
    if (!has_node(from)) throw NodeError("unknown node '" + from + "'");
    if (!has_node(to)) throw NodeError("unknown node '" + to + "'");
    if (from == to) return std::vector<NodeId>{from};

    std::map<NodeId, NodeId> parent;
    std::queue<NodeId> frontier;
    frontier.push(from);
    parent[from] = from;
    while (!frontier.empty()) {
        NodeId cur = frontier.front();
        frontier.pop();
        for (const auto& nb : adjacency_.at(cur)) {
            if (parent.count(nb)) continue;
            parent[nb] = cur;
            if (nb == to) {
                std::vector<NodeId> path{to};
                for (NodeId n = to; n != from; n = parent[n]) path.push_back(parent[n]);
                std::reverse(path.begin(), path.end());
                return path;
            }
            frontier.push(nb);
        }
    }
    return std::nullopt;
}

TopologyGraph TopologyGraph::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
        throw SchemaError("topology document needs 'nodes' and 'edges'");

    LinkModel link;
    if (j.contains("link")) {
        const auto& l = j.at("link");
        if (l.contains("latency_s")) link.latency_s = l.at("latency_s").get<double>();
        if (l.contains("loss_prob")) link.loss_prob = l.at("loss_prob").get<double>();
        if (l.contains("capacity_bps")) link.capacity_bps = l.at("capacity_bps").get<double>();
    }

    TopologyGraph g;
    for (const auto& n : j.at("nodes")) g.add_node(n.get<std::string>());
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2)
            throw SchemaError("each edge must be a [a, b] pair");
        try {
            g.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>(), link);
        } catch (const NodeError& err) {
            throw SchemaError(err.what());
        }
    }
    return g;
}

TopologyGraph TopologyGraph::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("topology", "cannot open topology file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("topology file is not valid JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

nlohmann::ordered_json TopologyGraph::to_json() const {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : nodes_) j["nodes"].push_back(n);
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [key, _] : links_) j["edges"].push_back({key.first, key.second});
    if (!links_.empty()) {
        const auto& l = links_.begin()->second;
        j["link"] = {{"latency_s", l.latency_s},
                     {"loss_prob", l.loss_prob},
                     {"capacity_bps", l.capacity_bps}};
    }
    return j;
}

TopologyGraph TopologyGraph::random_connected(std::span<const NodeId> names,
                                              double extra_edge_prob, std::uint64_t seed,
                                              const LinkModel& link) {
    if (names.empty()) throw ConfigError("topology.generator", "need at least one node");
    TopologyGraph g;
    for (const auto& n : names) g.add_node(n);
    std::mt19937_64 gen(seed);
    // Random spanning tree: each node attaches to an earlier one.
    for (std::size_t i = 1; i < names.size(); ++i) {
        const auto parent = static_cast<std::size_t>(rng::uniform01(gen) * static_cast<double>(i));
        g.add_edge(names[i], names[std::min(parent, i - 1)], link);
    }
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            if (!g.has_edge(names[i], names[j]) && rng::uniform01(gen) < extra_edge_prob)
                g.add_edge(names[i], names[j], link);
    return g;
}

double TrickleParams::i_max_s() const { return i_min_s * std::ldexp(1.0, i_doublings); }

void TrickleParams::validate() const {
    if (i_min_s <= 0.0) throw ConfigError("trickle.i_min_s", "i_min_s must be > 0");
    if (i_doublings < 0) throw ConfigError("trickle.i_doublings", "i_doublings must be >= 0");
    if (k < 1) throw ConfigError("trickle.k", "redundancy constant k must be >= 1");
}

namespace {

void restart_interval(TrickleState& s, std::mt19937_64& gen) {
    s.c = 0;
    s.t_fire_s = rng::uniform(gen, s.interval_s / 2.0, s.interval_s);
}

} // namespace

TrickleState trickle_init(const TrickleParams& params, std::uint64_t version,
                          std::mt19937_64& gen) {
    params.validate();
    TrickleState s;
    s.interval_s = params.i_min_s;
    s.version = version;
    restart_interval(s, gen);
    return s;
}

TrickleStep trickle_advance(TrickleState state, const TrickleEvent& event,
                            const TrickleParams& params, std::mt19937_64& gen) {
    TrickleStep step{state, TrickleAction::None};
    std::visit(
        [&](const auto& ev) {
            using E = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<E, IntervalStart>) {
                restart_interval(step.state, gen);
            } else if constexpr (std::is_same_v<E, HeardConsistent>) {
                step.state.c += 1;
            } else if constexpr (std::is_same_v<E, HeardInconsistent>) {
                if (ev.version > step.state.version) step.state.version = ev.version;
                step.state.interval_s = params.i_min_s;
                restart_interval(step.state, gen);
            } else if constexpr (std::is_same_v<E, TimerFired>) {
                if (step.state.c < params.k) step.action = TrickleAction::Transmit;
            } else if constexpr (std::is_same_v<E, IntervalExpired>) {
                step.state.interval_s =
                    std::min(step.state.interval_s * 2.0, params.i_max_s());
                restart_interval(step.state, gen);
            }
        },
        event);
    return step;
}

namespace {

struct SimEvent {
    double t = 0.0;
    std::uint64_t order = 0; // insertion sequence, ties execute FIFO
    enum class Kind { TimerFire, IntervalExpire, Receive } kind = Kind::Receive;
    std::size_t node = 0;
    std::uint64_t epoch = 0;   // interval generation for timer events
    std::uint64_t version = 0; // payload for Receive

    bool operator>(const SimEvent& other) const {
        if (t != other.t) return t > other.t;
        return order > other.order;
    }
};

} // namespace

DisseminationStats simulate_dissemination(const TopologyGraph& topology,
                                          const TrickleParams& params,
                                          const NodeId& originator, double duration_s,
                                          std::uint64_t seed) {
    params.validate();
    if (!topology.has_node(originator))
        throw NodeError("unknown originator '" + originator + "'");

    const std::vector<NodeId> ids(topology.nodes().begin(), topology.nodes().end());
    std::map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

    constexpr std::uint64_t kBaseVersion = 0;
    constexpr std::uint64_t kNewVersion = 1;

    std::mt19937_64 gen(seed);
    std::vector<TrickleState> states(ids.size());
    std::vector<std::uint64_t> epochs(ids.size(), 0);
    std::vector<double> interval_start(ids.size(), 0.0);

    DisseminationStats stats;
    std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue;
    std::uint64_t order = 0;

    auto schedule_interval_events = [&](std::size_t node, double now) {
        interval_start[node] = now;
        stats.interval_starts_per_node[ids[node]].push_back(now);
        queue.push({now + states[node].t_fire_s, order++, SimEvent::Kind::TimerFire, node,
                    epochs[node], 0});
        queue.push({now + states[node].interval_s, order++, SimEvent::Kind::IntervalExpire,
                    node, epochs[node], 0});
    };

    std::size_t covered = 1; // originator holds the new version from t = 0
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto version = ids[i] == originator ? kNewVersion : kBaseVersion;
        states[i] = trickle_init(params, version, gen);
        schedule_interval_events(i, 0.0);
    }
    stats.coverage_timeline.emplace_back(0.0, 1.0 / static_cast<double>(ids.size()));
    if (ids.size() == 1) stats.convergence_time_s = 0.0;

    auto transmit = [&](std::size_t node, double now) {
        stats.tx_total += 1;
        stats.tx_per_node[ids[node]] += 1;
        stats.tx_times_per_node[ids[node]].push_back(now);
        for (const auto& nb : topology.neighbors(ids[node])) {
            const auto& link = topology.link(ids[node], nb);
            if (rng::uniform01(gen) < link.loss_prob) continue;
            queue.push({now + link.latency_s, order++, SimEvent::Kind::Receive, index[nb], 0,
                        states[node].version});
        }
    };

    while (!queue.empty()) {
        const SimEvent ev = queue.top();
        queue.pop();
        if (ev.t >= duration_s) break;
        const std::size_t n = ev.node;

        switch (ev.kind) {
        case SimEvent::Kind::TimerFire: {
            if (ev.epoch != epochs[n]) break; // interval was reset, timer stale
            auto step = trickle_advance(states[n], TimerFired{}, params, gen);
            states[n] = step.state;
            if (step.action == TrickleAction::Transmit) transmit(n, ev.t);
            break;
        }
        case SimEvent::Kind::IntervalExpire: {
            if (ev.epoch != epochs[n]) break;
            states[n] = trickle_advance(states[n], IntervalExpired{}, params, gen).state;
            epochs[n] += 1;
            schedule_interval_events(n, ev.t);
            break;
        }
        case SimEvent::Kind::Receive: {
            if (ev.version == states[n].version) {
                states[n] = trickle_advance(states[n], HeardConsistent{}, params, gen).state;
                break;
            }
            const bool adopts = ev.version > states[n].version;
            states[n] =
                trickle_advance(states[n], HeardInconsistent{ev.version}, params, gen).state;
            epochs[n] += 1;
            schedule_interval_events(n, ev.t);
            if (adopts && states[n].version == kNewVersion) {
                covered += 1;
                const double coverage =
                    static_cast<double>(covered) / static_cast<double>(ids.size());
                stats.coverage_timeline.emplace_back(ev.t, coverage);
                if (covered == ids.size()) stats.convergence_time_s = ev.t;
            }
            break;
        }
        }
    }

    stats.coverage = static_cast<double>(covered) / static_cast<double>(ids.size());
    for (const auto& id : ids) {
        stats.tx_per_node.try_emplace(id, 0);
        stats.tx_times_per_node.try_emplace(id);
    }
    return stats;
}

DeliveryOutcome deliver_data(const TopologyGraph& topology, std::span<const NodeId> route,
                             std::uint64_t packet_bits, std::mt19937_64& gen) {
    DeliveryOutcome out{true, 0.0};
    if (route.size() <= 1) return out; // co-located endpoints
    for (std::size_t i = 0; i + 1 < route.size(); ++i) {
        const auto& link = topology.link(route[i], route[i + 1]); // RouteError if missing
        out.latency_s += link.latency_s +
                         static_cast<double>(packet_bits) / link.capacity_bps;
        if (rng::uniform01(gen) < link.loss_prob) {
            out.delivered = false;
            return out;
        }
    }
    return out;
}

DeliveryOutcome deliver_data(const TopologyGraph& topology, std::span<const NodeId> route,
                             std::uint64_t packet_bits, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    return deliver_data(topology, route, packet_bits, gen);
}

} // namespace fogpipe::mesh
