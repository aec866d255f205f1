#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogpipe/errors.hpp"

namespace fogpipe::cloud {

// Named events the sink understands.
bool is_known_event(std::string_view event);

// One protocol message. On the wire it is a 4-byte big-endian length followed
// by that many bytes of canonical UTF-8 JSON with exactly the keys
// {event, session, seq, payload}, serialized in that order, no insignificant
// whitespace.
struct CloudFrame {
    std::string event;
    std::string session;
    std::uint64_t seq = 0;
    nlohmann::ordered_json payload = nlohmann::ordered_json::object();

    bool operator==(const CloudFrame& other) const = default;
};

constexpr std::size_t kMaxFrameBytes = 16 * 1024 * 1024;

// Canonical JSON body (without the length prefix).
std::string frame_body(const CloudFrame& frame);

std::vector<std::uint8_t> encode_frame(const CloudFrame& frame);

// Decodes exactly one frame occupying the whole buffer.
// Throws TruncatedError / FrameTooLargeError / SchemaError.
CloudFrame decode_frame(std::span<const std::uint8_t> bytes);

// Validates an already-parsed body document against the frame schema.
CloudFrame frame_from_body(const nlohmann::ordered_json& body);

// Append-only JSON-lines persistence. One canonical frame body per line, LF
// terminated, flushed before persist() returns. Reopening an existing file
// resumes the record count from its line count.
class LongTermLog {
public:
    explicit LongTermLog(std::filesystem::path path);

    std::size_t persist(const CloudFrame& frame); // returns the record index
    std::size_t record_count() const;
    const std::filesystem::path& path() const { return path_; }

    static std::vector<CloudFrame> read_all(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
    std::ofstream out_;
    mutable std::mutex mutex_;
    std::size_t count_ = 0;
};

struct TemporalTrend {
    std::string device_id;
    std::size_t n_sessions = 0;
    double slope_hz_per_session = 0.0;
    double mean_freq_hz = 0.0;
};

// Session-level mean tap frequencies for one device, in log order, fitted
// against session index by ordinary least squares.
TemporalTrend temporal_trend(const std::filesystem::path& log_path,
                             const std::string& device_id);

} // namespace fogpipe::cloud
