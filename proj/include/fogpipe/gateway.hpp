#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fogpipe/cloud.hpp"
#include "fogpipe/device.hpp"
#include "fogpipe/signal.hpp"

namespace fogpipe::gateway {

enum class PolicyMode { SummaryOnly, SummaryPlusAlerts, RawPassthrough };

std::string_view policy_mode_name(PolicyMode mode);
std::optional<PolicyMode> policy_mode_from_name(std::string_view name);

// What reaches the cloud: summaries always; alerts for rounds whose mean
// frequency falls below the floor; raw series only in diagnostic passthrough.
struct ForwardPolicy {
    PolicyMode mode = PolicyMode::SummaryOnly;
    double alert_freq_floor_hz = 0.0;
};

struct GatewayConfig {
    std::size_t capacity = 16;        // bounded short-term store, sessions
    std::uint64_t reorder_window = 8; // max seq lead buffered before a gap is declared
    ForwardPolicy policy{};
    signal::AnalysisParams analysis{};
    signal::FlexSensorSpec sensor{};
};

enum class SessionStatus { Open, Closed };

struct SessionRecord {
    std::string session_id;
    std::string device_id;
    double started_at_s = 0.0;
    std::uint64_t raw_bytes_received = 0;
    std::map<signal::Channel, signal::AngleSeries> series; // conditioned at close
    SessionStatus status = SessionStatus::Open;
    bool flagged = false;       // a seq gap was declared on this session
    std::uint64_t gap_count = 0;
};

struct RoundSummary {
    std::string label;
    double mean_freq_hz = 0.0;
    double max_freq_hz = 0.0;
    std::uint64_t tap_count = 0;
};

struct SessionSummary {
    std::string session_id;
    std::string device_id;
    std::vector<RoundSummary> rounds;
    std::uint64_t total_taps = 0;
    double duration_s = 0.0;
    std::size_t summary_bytes = 0; // canonical payload size, excluding this field
};

struct Ack {
    bool accepted = false;
    std::uint64_t next_seq = 0;
};

// FIFO-bounded session store: evicts the record with the oldest started_at_s
// (insertion order breaks ties). Mutations are serialized internally.
class BoundedStore {
public:
    explicit BoundedStore(std::size_t capacity); // ConfigError if capacity < 1

    // Returns the evicted session id, if any. Throws DuplicateError on an
    // already-stored session_id.
    std::optional<std::string> insert(SessionRecord record);

    std::shared_ptr<const SessionRecord> find(const std::string& session_id) const;
    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::uint64_t insert_counter_ = 0;
    std::map<std::string, std::shared_ptr<const SessionRecord>> by_id_;
    std::map<std::pair<double, std::uint64_t>, std::string> by_age_;
};

std::optional<std::string> store_and_evict(BoundedStore& store, SessionRecord record);

// Canonical summary payload document; summary_bytes in the output equals the
// document's encoded size without the summary_bytes member itself.
nlohmann::ordered_json summary_payload(const SessionSummary& summary);

// Frames for one closed session under the policy. RawPassthrough needs the
// session record for the conditioned series; without one it degrades to the
// summary frame alone.
std::vector<cloud::CloudFrame> apply_forward_policy(
    const SessionSummary& summary, const ForwardPolicy& policy,
    const SessionRecord* record = nullptr);

std::size_t total_wire_bytes(const std::vector<cloud::CloudFrame>& frames);

// The fog node. Ingestion may be driven concurrently from any number of
// threads: distinct devices proceed in parallel, packets of one device are
// serialized, close/analyze excludes that device's ingestion.
class Gateway {
public:
    explicit Gateway(GatewayConfig config);

    // In-order packets append to the device's open session (auto-opened on
    // first contact). Duplicates ack idempotently. Out-of-order packets
    // within the reorder window are buffered; a jump beyond it flags the
    // session, skips the hole, ingests the packet, and throws GapError.
    Ack ingest_packet(const device::SamplePacket& packet);

    // Runs condition -> detect -> per-round profiles over the session, moves
    // the record into the bounded store, and returns the summary.
    // Tap analytics run on the index channel when present.
    SessionSummary close_session(const std::string& session_id,
                                 const device::TapProtocol& protocol);

    std::vector<cloud::CloudFrame> forward_frames(const std::string& session_id) const;

    std::string open_session_id(const std::string& device_id) const; // NotFoundError if none
    const BoundedStore& store() const { return store_; }
    BoundedStore& store() { return store_; }
    const GatewayConfig& config() const { return config_; }
    std::uint64_t raw_bytes_total() const;
    std::uint64_t samples_ingested() const;

private:
    struct DeviceState {
        std::mutex mutex;
        std::string session_id;
        std::uint64_t session_counter = 0;
        std::uint64_t expected_seq = 0;
        std::map<std::uint64_t, device::SamplePacket> pending;
        std::map<signal::Channel, std::vector<signal::FlexSample>> raw;
        double started_at_s = 0.0;
        std::uint64_t raw_bytes = 0;
        std::uint64_t gap_count = 0;
        bool flagged = false;
        bool open = false;
        std::uint64_t samples = 0;
    };

    std::shared_ptr<DeviceState> device_state(const std::string& device_id);
    void append_locked(DeviceState& st, const device::SamplePacket& packet);
    void open_session_locked(DeviceState& st, const std::string& device_id);

    GatewayConfig config_;
    BoundedStore store_;
    // Lock order: a DeviceState mutex may be held while taking the registry
    // mutex, never the other way around.
    mutable std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<DeviceState>> devices_;
    std::map<std::string, std::string> open_session_device_; // session id -> device id
    std::map<std::string, SessionSummary> summaries_;        // closed sessions
    std::atomic<std::uint64_t> total_raw_bytes_{0};
    std::atomic<std::uint64_t> total_samples_{0};
};

} // namespace fogpipe::gateway
