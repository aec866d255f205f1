#include "fogpipe/device.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

#include "fogpipe/rng.hpp"

namespace fogpipe::device {

namespace {

constexpr double kMaxPulseWidthS = 0.3;
constexpr double kThumbAmplitudeScale = 0.85;

double pulse_width_s(double freq_hz) {
    if (freq_hz <= 0.0) return kMaxPulseWidthS;
    return std::min(0.4 / freq_hz, kMaxPulseWidthS);
}

// Raised cosine centered on the tap instant: amplitude at center, zero at
// +/- width/2, zero outside.
double pulse_value(double t_s, double center_s, double width_s, double amplitude_deg) {
    const double dt = t_s - center_s;
    if (std::abs(dt) > width_s / 2.0) return 0.0;
    return amplitude_deg * 0.5 * (1.0 + std::cos(2.0 * M_PI * dt / width_s));
}

} // namespace

double TapProtocol::total_duration_s() const {
    double total = 0.0;
    for (const auto& r : rounds) total += r.duration_s;
    return total;
}

double TapProtocol::max_freq_hz() const {
    double f = 0.0;
    for (const auto& r : rounds) f = std::max({f, r.freq_start_hz, r.freq_end_hz});
    return f;
}

void TapProtocol::validate() const {
    if (rounds.empty()) throw ConfigError("protocol.rounds", "protocol needs at least one round");
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        const auto& r = rounds[i];
        const std::string where = "protocol.rounds[" + std::to_string(i) + "]";
        if (r.duration_s <= 0.0) throw ConfigError(where + ".duration_s", "round duration must be > 0");
        if (r.freq_start_hz < 0.0 || r.freq_end_hz < 0.0)
            throw ConfigError(where, "round frequencies must be >= 0");
    }
}

TapProtocol TapProtocol::default_five_round() {
    return TapProtocol{{
        {10.0, 1.0, 1.0, "round1"},
        {10.0, 1.0, 1.0, "round2"},
        {10.0, 2.0, 2.0, "round3"},
        {10.0, 3.5, 3.5, "round4"},
        {10.0, 1.0, 3.5, "round5"},
    }};
}

void GloveConfig::validate(const TapProtocol& protocol) const {
    protocol.validate();
    sensor.validate();
    if (sample_rate_hz <= 0.0) throw ConfigError("glove.sample_rate_hz", "sample_rate_hz must be > 0");
    if (amplitude_deg <= 0.0) throw ConfigError("glove.amplitude_deg", "amplitude_deg must be > 0");
    if (noise_std_deg < 0.0) throw ConfigError("glove.noise_std_deg", "noise_std_deg must be >= 0");
    if (channels.empty()) throw ConfigError("glove.channels", "at least one channel required");
    if (sample_rate_hz <= 2.0 * protocol.max_freq_hz())
        throw ConfigError("glove.sample_rate_hz",
                          "sample_rate_hz violates the Nyquist margin for the protocol");
}

std::vector<double> tap_times(const TapProtocol& protocol) {
    protocol.validate();
    std::vector<double> times;
    double offset = 0.0;
    for (const auto& r : protocol.rounds) {
        const double d = r.duration_s;
        const double f0 = r.freq_start_hz;
        const double f1 = r.freq_end_hz;
        // Cumulative tap count C(t) = f0*t + (f1-f0)*t^2/(2d); tap k sits at
        // C(t) = k - 1/2 so taps stay interior to the round.
        const double total = (f0 + f1) * d / 2.0;
        const double a = (f1 - f0) / (2.0 * d);
        for (std::size_t k = 1; static_cast<double>(k) - 0.5 <= total; ++k) {
            const double target = static_cast<double>(k) - 0.5;
            double t;
            if (std::abs(a) < 1e-12) {
                t = target / f0; // constant-rate round; f0 > 0 because total > 0
            } else {
                t = (-f0 + std::sqrt(f0 * f0 + 4.0 * a * target)) / (2.0 * a);
            }
            if (t >= 0.0 && t <= d) times.push_back(offset + t);
        }
        offset += d;
    }
    std::sort(times.begin(), times.end());
    return times;
}

std::vector<signal::FlexSample> synth_session(const TapProtocol& protocol,
                                              const GloveConfig& config) {
    config.validate(protocol);

    const auto taps = tap_times(protocol);
    // Instantaneous rate at each tap, for the pulse width.
    std::vector<double> widths(taps.size());
    {
        std::size_t i = 0;
        double offset = 0.0;
        std::size_t round_idx = 0;
        for (; i < taps.size(); ++i) {
            while (round_idx < protocol.rounds.size() &&
                   taps[i] > offset + protocol.rounds[round_idx].duration_s) {
                offset += protocol.rounds[round_idx].duration_s;
                ++round_idx;
            }
            const auto& r = protocol.rounds[std::min(round_idx, protocol.rounds.size() - 1)];
            const double local = taps[i] - offset;
            const double f = r.freq_start_hz +
                             (r.freq_end_hz - r.freq_start_hz) * local / r.duration_s;
            widths[i] = pulse_width_s(f);
        }
    }

    const double fs = config.sample_rate_hz;
    const auto n_ticks = static_cast<std::size_t>(std::llround(protocol.total_duration_s() * fs));
    std::mt19937_64 gen(config.seed);

    std::vector<signal::FlexSample> stream;
    stream.reserve(n_ticks * config.channels.size());
    for (std::size_t i = 0; i < n_ticks; ++i) {
        const double t = static_cast<double>(i) / fs;
        // Overlapping pulses take the max so the angle never exceeds the
        // configured amplitude.
        double base = 0.0;
        auto lo = std::lower_bound(taps.begin(), taps.end(), t - kMaxPulseWidthS / 2.0);
        for (auto it = lo; it != taps.end() && *it <= t + kMaxPulseWidthS / 2.0; ++it) {
            const auto k = static_cast<std::size_t>(it - taps.begin());
            base = std::max(base, pulse_value(t, *it, widths[k], 1.0));
        }
        for (const auto ch : config.channels) {
            const double amp = ch == signal::Channel::Thumb
                                   ? config.amplitude_deg * kThumbAmplitudeScale
                                   : config.amplitude_deg;
            double angle = base * amp;
            if (config.noise_std_deg > 0.0)
                angle += rng::gaussian(gen, 0.0, config.noise_std_deg);
            stream.push_back({t, ch, signal::angle_to_voltage(angle, config.sensor)});
        }
    }
    return stream;
}

namespace {

const char* kCsvHeader = "t_s,channel,voltage_v";

double parse_double_field(std::string_view field, std::size_t line_no, const char* what) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(line_no, std::string("line ") + std::to_string(line_no) +
                                      ": bad " + what + " value '" + std::string(field) + "'");
    return value;
}

} // namespace

std::vector<signal::FlexSample> replay_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open trace file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("trace file is empty (missing header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader)
        throw SchemaError("trace header must be exactly '" + std::string(kCsvHeader) +
                          "', got '" + line + "'");

    std::vector<signal::FlexSample> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos)
            throw ParseError(line_no, "line " + std::to_string(line_no) +
                                          ": expected 3 comma-separated fields");

        signal::FlexSample s;
        s.t_s = parse_double_field(std::string_view(line).substr(0, c1), line_no, "t_s");
        const auto ch_name = std::string_view(line).substr(c1 + 1, c2 - c1 - 1);
        const auto ch = signal::channel_from_name(ch_name);
        if (!ch)
            throw ParseError(line_no, "line " + std::to_string(line_no) +
                                          ": unknown channel '" + std::string(ch_name) + "'");
        s.channel = *ch;
        s.voltage_v = parse_double_field(std::string_view(line).substr(c2 + 1), line_no, "voltage");
        samples.push_back(s);
    }
    return samples;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

void write_csv(const std::filesystem::path& path, std::span<const signal::FlexSample> samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PersistError("cannot open for writing: " + path.string());
    out << kCsvHeader << '\n';
    for (const auto& s : samples)
        out << format_double(s.t_s) << ',' << signal::channel_name(s.channel) << ','
            << format_double(s.voltage_v) << '\n';
    if (!out.flush()) throw PersistError("write failed: " + path.string());
}

std::vector<SamplePacket> packetize(std::span<const signal::FlexSample> stream,
                                    const std::string& device_id, std::size_t batch_n) {
    if (batch_n < 1) throw DomainError("batch_n must be >= 1");
    std::vector<SamplePacket> packets;
    packets.reserve((stream.size() + batch_n - 1) / batch_n);
    std::uint64_t seq = 0;
    for (std::size_t i = 0; i < stream.size(); i += batch_n) {
        SamplePacket p;
        p.device_id = device_id;
        p.seq = seq++;
        const auto count = std::min(batch_n, stream.size() - i);
        p.samples.assign(stream.begin() + static_cast<std::ptrdiff_t>(i),
                         stream.begin() + static_cast<std::ptrdiff_t>(i + count));
        p.sent_at_s = p.samples.back().t_s;
        packets.push_back(std::move(p));
    }
    return packets;
}

nlohmann::ordered_json packet_to_json(const SamplePacket& packet) {
    nlohmann::ordered_json j;
    j["device"] = packet.device_id;
    j["seq"] = packet.seq;
    j["sent_at_s"] = packet.sent_at_s;
    auto samples = nlohmann::ordered_json::array();
    for (const auto& s : packet.samples)
        samples.push_back({s.t_s, signal::channel_name(s.channel), s.voltage_v});
    j["samples"] = std::move(samples);
    return j;
}

std::size_t packet_wire_bytes(const SamplePacket& packet) {
    return packet_to_json(packet).dump().size();
}

} // namespace fogpipe::device
