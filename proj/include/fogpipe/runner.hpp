#pragma once

#include "fogpipe/config.hpp"

namespace fogpipe::cli {

// Each command writes its artifacts under config.out_dir and throws a
// fogpipe::Error subclass on failure; exit-code mapping happens in main.

// Device synthesis -> lossy mesh delivery -> gateway analytics -> framed TCP
// transfer into the sink's long-term log. Also runs a control-plane
// dissemination pass over the topology. Writes longterm.jsonl,
// run_report.json and rounds.csv.
void run_simulate(const RunConfig& config);

// Feeds a CSV trace through gateway -> sink; same artifacts as simulate
// minus the mesh sections.
void run_replay(const RunConfig& config);

// Queue scenarios + stage profiling. Writes bench.csv and bench_report.json.
void run_bench(const RunConfig& config);

// Standalone sink: serve until duration_s elapses (or SIGINT when 0).
void run_sink(const RunConfig& config);

// Standalone gateway: replay a trace and forward frames to an already
// running sink at sink.host:sink.port.
void run_gateway(const RunConfig& config);

} // namespace fogpipe::cli
