#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "fogpipe/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string trace;
    std::string device_id;
    std::vector<std::string> extras;
};

fogpipe::cli::RunConfig load_config(const CommonOpts& opts) {
    std::ifstream in(opts.config_path);
    if (!in)
        throw fogpipe::ConfigError("cannot open config file: " + opts.config_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw fogpipe::ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }

    if (!opts.out_dir.empty()) doc["out_dir"] = opts.out_dir;
    if (!opts.trace.empty()) doc["replay"]["trace"] = opts.trace;
    if (!opts.device_id.empty()) doc["replay"]["device_id"] = opts.device_id;
    for (const auto& extra : opts.extras) {
        std::string_view a = extra;
        if (a.rfind("--", 0) != 0)
            throw fogpipe::ConfigError("unexpected argument '" + extra +
                                       "' (overrides look like --key.path=value)");
        fogpipe::cli::apply_override(doc, a.substr(2));
    }

    std::vector<std::string> warnings;
    auto cfg = fogpipe::cli::parse_config_json(doc, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fog-tier pipeline: simulated gloves, meshed links, a fog gateway and a cloud sink"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string command;
    for (const auto* name : {"simulate", "gateway", "sink", "replay", "bench"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config_path, "JSON run configuration")->required();
        sub->add_option("--out", opts.out_dir, "output directory (overrides out_dir)");
        if (std::string(name) == "replay" || std::string(name) == "gateway") {
            sub->add_option("--trace", opts.trace, "CSV trace to feed through the pipeline");
            sub->add_option("--device", opts.device_id, "device id for the trace");
        }
        sub->allow_extras();
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        opts.extras = app.get_subcommands().front()->remaining();
        const auto cfg = load_config(opts);
        if (command == "simulate") fogpipe::cli::run_simulate(cfg);
        else if (command == "replay") fogpipe::cli::run_replay(cfg);
        else if (command == "bench") fogpipe::cli::run_bench(cfg);
        else if (command == "sink") fogpipe::cli::run_sink(cfg);
        else if (command == "gateway") fogpipe::cli::run_gateway(cfg);
    } catch (const fogpipe::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
