#include <doctest.h>

#include <random>

#include "fogpipe/mesh.hpp"
#include "fogpipe/rng.hpp"

using namespace fogpipe;
using namespace fogpipe::mesh;

namespace {

TopologyGraph clique(std::size_t n, const LinkModel& link = {}) {
    TopologyGraph g;
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("n" + std::to_string(i));
        g.add_node(ids.back());
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g.add_edge(ids[i], ids[j], link);
    return g;
}

std::vector<NodeId> names(std::size_t n) {
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
    return ids;
}

// Transmissions per node per interval, computed from the reported timelines.
std::size_t max_tx_in_any_interval(const DisseminationStats& stats, double duration_s) {
    std::size_t worst = 0;
    for (const auto& [node, starts] : stats.interval_starts_per_node) {
        const auto& txs = stats.tx_times_per_node.at(node);
        for (std::size_t i = 0; i < starts.size(); ++i) {
            const double lo = starts[i];
            const double hi = i + 1 < starts.size() ? starts[i + 1] : duration_s;
            std::size_t count = 0;
            for (double t : txs)
                if (t >= lo && t < hi) ++count;
            worst = std::max(worst, count);
        }
    }
    return worst;
}

} // namespace

TEST_CASE("trickle_advance rules") {
    TrickleParams params{1.0, 2, 2}; // i_min 1 s, i_max 4 s, k 2
    std::mt19937_64 gen(11u);

    SUBCASE("timer fires only under the redundancy constant") {
        auto st = trickle_init(params, 0, gen);
        st.c = 2;
        CHECK(trickle_advance(st, TimerFired{}, params, gen).action == TrickleAction::None);
        st.c = 1;
        CHECK(trickle_advance(st, TimerFired{}, params, gen).action == TrickleAction::Transmit);
    }
    SUBCASE("consistent messages bump the counter") {
        auto st = trickle_init(params, 0, gen);
        const auto step = trickle_advance(st, HeardConsistent{}, params, gen);
        CHECK(step.state.c == st.c + 1);
        CHECK(step.action == TrickleAction::None);
    }
    SUBCASE("newer version resets to i_min and adopts") {
        auto st = trickle_init(params, 3, gen);
        st.interval_s = params.i_max_s();
        const auto step = trickle_advance(st, HeardInconsistent{7}, params, gen);
        CHECK(step.state.version == 7);
        CHECK(step.state.interval_s == doctest::Approx(params.i_min_s));
        CHECK(step.state.c == 0);
    }
    SUBCASE("stale version resets without adopting") {
        auto st = trickle_init(params, 9, gen);
        st.interval_s = params.i_max_s();
        const auto step = trickle_advance(st, HeardInconsistent{2}, params, gen);
        CHECK(step.state.version == 9);
        CHECK(step.state.interval_s == doctest::Approx(params.i_min_s));
    }
    SUBCASE("expiry doubles up to i_max") {
        auto st = trickle_init(params, 0, gen);
        auto step = trickle_advance(st, IntervalExpired{}, params, gen);
        CHECK(step.state.interval_s == doctest::Approx(2.0));
        step = trickle_advance(step.state, IntervalExpired{}, params, gen);
        CHECK(step.state.interval_s == doctest::Approx(4.0));
        step = trickle_advance(step.state, IntervalExpired{}, params, gen);
        CHECK(step.state.interval_s == doctest::Approx(4.0)); // capped
    }
    SUBCASE("fire time is drawn from the second half of the interval") {
        for (int i = 0; i < 200; ++i) {
            const auto st = trickle_init(params, 0, gen);
            CHECK(st.t_fire_s >= st.interval_s / 2.0);
            CHECK(st.t_fire_s < st.interval_s);
        }
    }
}

TEST_CASE("isolated node transmits once per interval: 1,2,4,4,4") {
    TopologyGraph g;
    g.add_node("solo");
    TrickleParams params{1.0, 2, 1};
    const auto stats = simulate_dissemination(g, params, "solo", 15.0, 99);
    CHECK(stats.tx_total == 5);
    CHECK(stats.coverage == doctest::Approx(1.0));
    const auto& starts = stats.interval_starts_per_node.at("solo");
    REQUIRE(starts.size() >= 5);
    CHECK(starts[0] == doctest::Approx(0.0));
    CHECK(starts[1] == doctest::Approx(1.0));
    CHECK(starts[2] == doctest::Approx(3.0));
    CHECK(starts[3] == doctest::Approx(7.0));
    CHECK(starts[4] == doctest::Approx(11.0));
}

TEST_CASE("dissemination coverage") {
    TrickleParams params{};

    SUBCASE("lossless clique reaches everyone") {
        const auto stats = simulate_dissemination(clique(5), params, "n0", 60.0, 7);
        CHECK(stats.coverage == doctest::Approx(1.0));
        CHECK(stats.convergence_time_s.has_value());
    }
    SUBCASE("an isolated node stays uncovered") {
        auto g = clique(4);
        g.add_node("lonely");
        const auto stats = simulate_dissemination(g, params, "n0", 60.0, 7);
        CHECK(stats.coverage == doctest::Approx(0.8));
        CHECK(!stats.convergence_time_s.has_value());
    }
    SUBCASE("total loss leaves only the originator") {
        LinkModel lossy;
        lossy.loss_prob = 1.0;
        const auto stats = simulate_dissemination(clique(5, lossy), params, "n0", 60.0, 7);
        CHECK(stats.coverage == doctest::Approx(0.2));
    }
    SUBCASE("unknown originator") {
        CHECK_THROWS_AS(simulate_dissemination(clique(3), params, "ghost", 10.0, 1),
                        NodeError);
    }
    SUBCASE("coverage timeline is monotone") {
        const auto g = TopologyGraph::random_connected(names(12), 0.2, 5, {});
        const auto stats = simulate_dissemination(g, params, "n0", 200.0, 8);
        for (std::size_t i = 1; i < stats.coverage_timeline.size(); ++i) {
            CHECK(stats.coverage_timeline[i].second >= stats.coverage_timeline[i - 1].second);
            CHECK(stats.coverage_timeline[i].first >= stats.coverage_timeline[i - 1].first);
        }
    }
    SUBCASE("connected random graph converges within 10 i_max") {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto g = TopologyGraph::random_connected(names(20), 0.15, seed, {});
            const auto stats =
                simulate_dissemination(g, params, "n0", 10.0 * params.i_max_s(), seed);
            CHECK(stats.coverage == doctest::Approx(1.0));
        }
    }
    SUBCASE("deterministic for a fixed seed") {
        const auto g = TopologyGraph::random_connected(names(10), 0.3, 21, {});
        const auto a = simulate_dissemination(g, params, "n0", 100.0, 13);
        const auto b = simulate_dissemination(g, params, "n0", 100.0, 13);
        CHECK(a.tx_total == b.tx_total);
        CHECK(a.coverage == b.coverage);
        CHECK(a.convergence_time_s == b.convergence_time_s);
        CHECK(a.tx_times_per_node == b.tx_times_per_node);
    }
}

TEST_CASE("each node transmits at most once per interval") {
    TrickleParams params{};
    const auto g = TopologyGraph::random_connected(names(15), 0.25, 4, {});
    const double duration = 12.0 * params.i_max_s();
    const auto stats = simulate_dissemination(g, params, "n0", duration, 31);
    CHECK(max_tx_in_any_interval(stats, duration) <= 1);
}

TEST_CASE("suppression keeps clique traffic under one per node") {
    TrickleParams params{1.0, 4, 1};
    const double i_max = params.i_max_s();
    const double settle = 4.0 * i_max;
    const double window = 50.0 * i_max;
    const auto stats = simulate_dissemination(clique(6), params, "n0", settle + window, 17);
    std::size_t tx_in_window = 0;
    for (const auto& [node, txs] : stats.tx_times_per_node)
        for (double t : txs)
            if (t >= settle) ++tx_in_window;
    const double per_interval = static_cast<double>(tx_in_window) / 50.0;
    CHECK(per_interval < 6.0);
}

TEST_CASE("deliver_data") {
    LinkModel link;
    link.latency_s = 0.01;
    link.loss_prob = 0.0;
    link.capacity_bps = 25e6;
    TopologyGraph g;
    g.add_node("a");
    g.add_node("b");
    g.add_node("c");
    g.add_edge("a", "b", link);
    g.add_edge("b", "c", link);

    SUBCASE("one lossless hop: latency plus serialization") {
        const std::vector<NodeId> route{"a", "b"};
        const auto out = deliver_data(g, route, 1000, std::uint64_t{1});
        CHECK(out.delivered);
        // 0.01 + 1000/25e6 = 0.01004
        CHECK(out.latency_s == doctest::Approx(0.01004).epsilon(1e-12));
    }
    SUBCASE("a certain-loss hop never delivers") {
        LinkModel dead = link;
        dead.loss_prob = 1.0;
        TopologyGraph h;
        h.add_node("a");
        h.add_node("b");
        h.add_edge("a", "b", dead);
        const std::vector<NodeId> route{"a", "b"};
        CHECK(!deliver_data(h, route, 1000, std::uint64_t{1}).delivered);
    }
    SUBCASE("empty route is co-located") {
        const auto out = deliver_data(g, std::vector<NodeId>{}, 1000, std::uint64_t{1});
        CHECK(out.delivered);
        CHECK(out.latency_s == 0.0);
    }
    SUBCASE("missing edge is a route error") {
        const std::vector<NodeId> route{"a", "c"};
        CHECK_THROWS_AS(deliver_data(g, route, 10, std::uint64_t{1}), RouteError);
    }
    SUBCASE("two hops accumulate") {
        const std::vector<NodeId> route{"a", "b", "c"};
        const auto out = deliver_data(g, route, 1000, std::uint64_t{1});
        CHECK(out.delivered);
        CHECK(out.latency_s == doctest::Approx(2 * 0.01004).epsilon(1e-12));
    }
}

TEST_CASE("topology graph") {
    SUBCASE("shortest path by hop count") {
        TopologyGraph g;
        for (const char* n : {"a", "b", "c", "d"}) g.add_node(n);
        g.add_edge("a", "b", {});
        g.add_edge("b", "c", {});
        g.add_edge("a", "d", {});
        g.add_edge("d", "c", {});
        const auto path = g.shortest_path("a", "c");
        REQUIRE(path.has_value());
        CHECK(path->size() == 3);
        CHECK(path->front() == "a");
        CHECK(path->back() == "c");
    }
    SUBCASE("unreachable gives nullopt") {
        TopologyGraph g;
        g.add_node("a");
        g.add_node("b");
        CHECK(!g.shortest_path("a", "b").has_value());
        const auto self = g.shortest_path("a", "a");
        REQUIRE(self.has_value());
        CHECK(self->size() == 1);
    }
    SUBCASE("self-loops and unknown nodes are rejected") {
        TopologyGraph g;
        g.add_node("a");
        CHECK_THROWS_AS(g.add_edge("a", "a", {}), NodeError);
        CHECK_THROWS_AS(g.add_edge("a", "zzz", {}), NodeError);
    }
    SUBCASE("json round-trip") {
        const auto doc = nlohmann::json::parse(R"({
            "nodes": ["a", "b", "c"],
            "edges": [["a","b"], ["b","c"]],
            "link": {"latency_s": 0.002, "loss_prob": 0.1, "capacity_bps": 1000000}
        })");
        const auto g = TopologyGraph::from_json(doc);
        CHECK(g.node_count() == 3);
        CHECK(g.edge_count() == 2);
        CHECK(g.link("a", "b").latency_s == doctest::Approx(0.002));
        CHECK(g.link("b", "c").loss_prob == doctest::Approx(0.1));
        const auto back = TopologyGraph::from_json(g.to_json());
        CHECK(back.node_count() == 3);
        CHECK(back.edge_count() == 2);
    }
    SUBCASE("bad documents") {
        CHECK_THROWS_AS(TopologyGraph::from_json(nlohmann::json::parse(
                            R"({"nodes":["a"],"edges":[["a","b"]]})")),
                        SchemaError);
        CHECK_THROWS_AS(TopologyGraph::from_json(nlohmann::json::parse(R"({"nodes":[]})")),
                        SchemaError);
        CHECK_THROWS_AS(TopologyGraph::from_json(nlohmann::json::parse(
                            R"({"nodes":["a"],"edges":[["a","a"]]})")),
                        SchemaError);
    }
    SUBCASE("random_connected is connected and deterministic") {
        const auto ids = names(16);
        const auto a = TopologyGraph::random_connected(ids, 0.2, 77, {});
        const auto b = TopologyGraph::random_connected(ids, 0.2, 77, {});
        CHECK(a.edge_count() == b.edge_count());
        for (const auto& n : ids) {
            const auto path = a.shortest_path("n0", n);
            CHECK(path.has_value());
        }
    }
}
