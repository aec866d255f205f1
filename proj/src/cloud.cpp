#include "fogpipe/cloud.hpp"

#include <array>

namespace fogpipe::cloud {

bool is_known_event(std::string_view event) {
    constexpr std::array<std::string_view, 5> known{"summary", "alert", "raw", "hello", "ack"};
    for (const auto& k : known)
        if (event == k) return true;
    return false;
}

std::string frame_body(const CloudFrame& frame) {
    nlohmann::ordered_json j;
    j["event"] = frame.event;
    j["session"] = frame.session;
    j["seq"] = frame.seq;
    j["payload"] = frame.payload;
    return j.dump();
}

std::vector<std::uint8_t> encode_frame(const CloudFrame& frame) {
    if (!is_known_event(frame.event))
        throw SchemaError("unknown frame event '" + frame.event + "'");
    const std::string body = frame_body(frame);
    if (body.size() > kMaxFrameBytes)
        throw FrameTooLargeError("frame body of " + std::to_string(body.size()) +
                                 " bytes exceeds the 16 MiB limit");
    const auto n = static_cast<std::uint32_t>(body.size());
    std::vector<std::uint8_t> out;
    out.reserve(4 + body.size());
    out.push_back(static_cast<std::uint8_t>(n >> 24));
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

CloudFrame frame_from_body(const nlohmann::ordered_json& body) {
    if (!body.is_object() || body.size() != 4 || !body.contains("event") ||
        !body.contains("session") || !body.contains("seq") || !body.contains("payload"))
        throw SchemaError("frame body must hold exactly {event, session, seq, payload}");
    if (!body.at("event").is_string() || !body.at("session").is_string() ||
        !body.at("seq").is_number_unsigned())
        throw SchemaError("frame field types: event/session strings, seq unsigned integer");

    CloudFrame f;
    f.event = body.at("event").get<std::string>();
    if (!is_known_event(f.event)) throw SchemaError("unknown frame event '" + f.event + "'");
    f.session = body.at("session").get<std::string>();
    f.seq = body.at("seq").get<std::uint64_t>();
    f.payload = body.at("payload").get<nlohmann::ordered_json>();
    return f;
}

CloudFrame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw TruncatedError("frame shorter than its length prefix");
    const std::uint32_t n = (static_cast<std::uint32_t>(bytes[0]) << 24) |
                            (static_cast<std::uint32_t>(bytes[1]) << 16) |
                            (static_cast<std::uint32_t>(bytes[2]) << 8) |
                            static_cast<std::uint32_t>(bytes[3]);
    if (n > kMaxFrameBytes)
        throw FrameTooLargeError("length prefix " + std::to_string(n) +
                                 " exceeds the 16 MiB limit");
    if (bytes.size() != 4 + static_cast<std::size_t>(n))
        throw TruncatedError("frame body truncated: prefix says " + std::to_string(n) +
                             " bytes, got " + std::to_string(bytes.size() - 4));
    nlohmann::ordered_json body;
    try {
        body = nlohmann::ordered_json::parse(bytes.begin() + 4, bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("frame body is not valid JSON: " + std::string(e.what()));
    }
    return frame_from_body(body);
}

LongTermLog::LongTermLog(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
        std::ifstream in(path_, std::ios::binary);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++count_;
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw PersistError("cannot open log for append: " + path_.string());
}

std::size_t LongTermLog::persist(const CloudFrame& frame) {
    const std::string line = frame_body(frame);
    std::lock_guard lock(mutex_);
    out_ << line << '\n';
    if (!out_.flush())
        throw PersistError("log write failed: " + path_.string());
    return count_++;
}

std::size_t LongTermLog::record_count() const {
    std::lock_guard lock(mutex_);
    return count_;
}

std::vector<CloudFrame> LongTermLog::read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PersistError("cannot open log: " + path.string());
    std::vector<CloudFrame> frames;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::ordered_json body;
        try {
            body = nlohmann::ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("log record " + std::to_string(line_no) +
                              " is not valid JSON: " + std::string(e.what()));
        }
        frames.push_back(frame_from_body(body));
    }
    return frames;
}

TemporalTrend temporal_trend(const std::filesystem::path& log_path,
                             const std::string& device_id) {
    std::vector<double> session_means;
    for (const auto& frame : LongTermLog::read_all(log_path)) {
        if (frame.event != "summary") continue;
        if (!frame.payload.contains("device_id") ||
            frame.payload.at("device_id").get<std::string>() != device_id)
            continue;
        const auto& rounds = frame.payload.at("rounds");
        if (rounds.empty()) continue;
        double sum = 0.0;
        for (const auto& r : rounds) sum += r.at("mean_freq_hz").get<double>();
        session_means.push_back(sum / static_cast<double>(rounds.size()));
    }

    if (session_means.size() < 2)
        throw InsufficientDataError("need at least 2 sessions for device '" + device_id +
                                    "', found " + std::to_string(session_means.size()));

    const auto n = static_cast<double>(session_means.size());
    double mean_x = (n - 1.0) / 2.0; // indices 0..n-1
    double mean_y = 0.0;
    for (const double y : session_means) mean_y += y;
    mean_y /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < session_means.size(); ++i) {
        const double dx = static_cast<double>(i) - mean_x;
        sxy += dx * (session_means[i] - mean_y);
        sxx += dx * dx;
    }

    TemporalTrend trend;
    trend.device_id = device_id;
    trend.n_sessions = session_means.size();
    trend.slope_hz_per_session = sxy / sxx;
    trend.mean_freq_hz = mean_y;
    return trend;
}

} // namespace fogpipe::cloud
