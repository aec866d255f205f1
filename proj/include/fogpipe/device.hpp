#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogpipe/signal.hpp"

namespace fogpipe::device {

// One tapping round: the instantaneous tap rate ramps linearly from
// freq_start_hz to freq_end_hz over duration_s.
struct Round {
    double duration_s = 0.0;
    double freq_start_hz = 0.0;
    double freq_end_hz = 0.0;
    std::string label;
};

struct TapProtocol {
    std::vector<Round> rounds;

    double total_duration_s() const;
    double max_freq_hz() const;
    void validate() const; // throws ConfigError

    // Two slow rounds, one medium, one fast, and a slow-to-fast ramp,
    // 10 s each. Frequencies are artifact defaults, not measured values.
    static TapProtocol default_five_round();
};

struct GloveConfig {
    double sample_rate_hz = 50.0;
    double amplitude_deg = 60.0;
    double noise_std_deg = 2.0;
    std::vector<signal::Channel> channels{signal::Channel::Index, signal::Channel::Thumb};
    signal::FlexSensorSpec sensor{};
    std::uint64_t seed = 0;

    void validate(const TapProtocol& protocol) const; // includes Nyquist margin check
};

// A batch of samples in flight from one device. seq counts from 0 gap-free.
struct SamplePacket {
    std::string device_id;
    std::uint64_t seq = 0;
    std::vector<signal::FlexSample> samples;
    double sent_at_s = 0.0;
};

// Ground-truth tap instants for a protocol (independent of sampling).
std::vector<double> tap_times(const TapProtocol& protocol);

// Synthesize a full session: raised-cosine tap pulses at the protocol's tap
// instants, seeded Gaussian angle noise, divider voltage conversion, one
// sample per enabled channel per tick. Deterministic for a fixed seed.
std::vector<signal::FlexSample> synth_session(const TapProtocol& protocol,
                                              const GloveConfig& config);

// CSV trace I/O. Header is exactly "t_s,channel,voltage_v", LF endings.
std::vector<signal::FlexSample> replay_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, std::span<const signal::FlexSample> samples);

std::vector<SamplePacket> packetize(std::span<const signal::FlexSample> stream,
                                    const std::string& device_id, std::size_t batch_n);

// Canonical JSON encoding of a packet; wire_bytes is its UTF-8 length and is
// the byte figure used for link serialization and gateway ingest accounting.
nlohmann::ordered_json packet_to_json(const SamplePacket& packet);
std::size_t packet_wire_bytes(const SamplePacket& packet);

} // namespace fogpipe::device
