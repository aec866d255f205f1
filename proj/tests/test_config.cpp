#include <doctest.h>

#include "fogpipe/config.hpp"

using namespace fogpipe;
using namespace fogpipe::cli;

TEST_CASE("parse_config_json") {
    SUBCASE("minimal config fills defaults") {
        const auto doc = nlohmann::json::parse(R"({"seed": 42, "devices": {"count": 1}})");
        std::vector<std::string> warnings;
        const auto cfg = parse_config_json(doc, &warnings);
        CHECK(cfg.seed == 42);
        CHECK(cfg.device_count == 1);
        CHECK(cfg.batch_n == 25);
        CHECK(cfg.glove.sample_rate_hz == doctest::Approx(50.0));
        CHECK(cfg.protocol.rounds.size() == 5);
        CHECK(cfg.gateway.policy.mode == gateway::PolicyMode::SummaryOnly);
        CHECK(cfg.trickle.i_min_s == doctest::Approx(1.0));
        CHECK(cfg.bench.scenarios.size() == 2);
        CHECK(cfg.bench.scenarios[0].service_s == doctest::Approx(12.39));
        CHECK(cfg.bench.scenarios[1].service_s == doctest::Approx(64.65));
        CHECK(warnings.empty());
    }
    SUBCASE("missing seed names the key") {
        try {
            parse_config_json(nlohmann::json::parse(R"({"devices": {"count": 1}})"));
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "seed");
        }
    }
    SUBCASE("unknown keys warn but do not fail") {
        const auto doc = nlohmann::json::parse(R"({"seed": 1, "colour": "red"})");
        std::vector<std::string> warnings;
        const auto cfg = parse_config_json(doc, &warnings);
        CHECK(cfg.seed == 1);
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("colour") != std::string::npos);
    }
    SUBCASE("type mismatches carry the dotted path") {
        try {
            parse_config_json(nlohmann::json::parse(
                R"({"seed": 1, "gateway": {"policy": {"alert_freq_floor_hz": "high"}}})"));
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "gateway.policy.alert_freq_floor_hz");
        }
    }
    SUBCASE("bad policy mode") {
        CHECK_THROWS_AS(parse_config_json(nlohmann::json::parse(
                            R"({"seed": 1, "gateway": {"policy": {"mode": "yolo"}}})")),
                        ConfigError);
    }
    SUBCASE("protocol rounds and channels parse") {
        const auto doc = nlohmann::json::parse(R"({
            "seed": 7,
            "devices": {
                "glove": {"channels": ["index"], "noise_std_deg": 0.0},
                "protocol": {"rounds": [
                    {"duration_s": 4.0, "freq_start_hz": 2.0, "label": "warmup"},
                    {"duration_s": 6.0, "freq_start_hz": 1.0, "freq_end_hz": 3.0}
                ]}
            }
        })");
        const auto cfg = parse_config_json(doc);
        REQUIRE(cfg.protocol.rounds.size() == 2);
        CHECK(cfg.protocol.rounds[0].label == "warmup");
        CHECK(cfg.protocol.rounds[0].freq_end_hz == doctest::Approx(2.0)); // defaults to start
        CHECK(cfg.protocol.rounds[1].label == "round2");
        CHECK(cfg.protocol.rounds[1].freq_end_hz == doctest::Approx(3.0));
        CHECK(cfg.glove.channels.size() == 1);
    }
    SUBCASE("nyquist violation surfaces as ConfigError") {
        const auto doc = nlohmann::json::parse(
            R"({"seed": 1, "devices": {"glove": {"sample_rate_hz": 3.0}}})");
        CHECK_THROWS_AS(parse_config_json(doc), ConfigError);
    }
    SUBCASE("missing referenced files fail at parse time") {
        const auto doc = nlohmann::json::parse(
            R"({"seed": 1, "topology": {"file": "/nonexistent/topo.json"}})");
        CHECK_THROWS_AS(parse_config_json(doc), ConfigError);
        const auto doc2 = nlohmann::json::parse(
            R"({"seed": 1, "replay": {"trace": "/nonexistent/trace.csv"}})");
        CHECK_THROWS_AS(parse_config_json(doc2), ConfigError);
    }
    SUBCASE("custom scenario with inline power model") {
        const auto doc = nlohmann::json::parse(R"({
            "seed": 1,
            "bench": {"scenarios": [{
                "name": "board", "interarrival_s": 30.0, "service_s": 10.0,
                "n_jobs": 50, "service_dist": "exponential",
                "power": {"name": "board", "active_mw": 250.0}
            }]}
        })");
        const auto cfg = parse_config_json(doc);
        REQUIRE(cfg.bench.scenarios.size() == 1);
        CHECK(cfg.bench.scenarios[0].service_dist == bench::TimeDist::Exponential);
        CHECK(cfg.bench.scenarios[0].power.active_mw == doctest::Approx(250.0));
    }
}

TEST_CASE("apply_override") {
    auto doc = nlohmann::json::parse(R"({"seed": 1})");

    SUBCASE("dotted paths create nested objects") {
        apply_override(doc, "gateway.policy.mode=summary_plus_alerts");
        CHECK(doc["gateway"]["policy"]["mode"] == "summary_plus_alerts");
    }
    SUBCASE("values parse as JSON when possible") {
        apply_override(doc, "devices.count=3");
        apply_override(doc, "gateway.policy.alert_freq_floor_hz=0.5");
        apply_override(doc, "devices.glove.channels=[\"index\"]");
        CHECK(doc["devices"]["count"] == 3);
        CHECK(doc["gateway"]["policy"]["alert_freq_floor_hz"] == doctest::Approx(0.5));
        CHECK(doc["devices"]["glove"]["channels"].size() == 1);
    }
    SUBCASE("plain words stay strings") {
        apply_override(doc, "out_dir=results");
        CHECK(doc["out_dir"] == "results");
    }
    SUBCASE("malformed overrides") {
        CHECK_THROWS_AS(apply_override(doc, "no_equals"), ConfigError);
        CHECK_THROWS_AS(apply_override(doc, "=5"), ConfigError);
        CHECK_THROWS_AS(apply_override(doc, "a..b=5"), ConfigError);
    }
    SUBCASE("overridden document still validates") {
        apply_override(doc, "devices.count=2");
        apply_override(doc, "seed=99");
        const auto cfg = parse_config_json(doc);
        CHECK(cfg.seed == 99);
        CHECK(cfg.device_count == 2);
    }
}
