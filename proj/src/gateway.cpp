#include "fogpipe/gateway.hpp"

#include <algorithm>
#include <cmath>

namespace fogpipe::gateway {

std::string_view policy_mode_name(PolicyMode mode) {
    switch (mode) {
    case PolicyMode::SummaryOnly: return "summary_only";
    case PolicyMode::SummaryPlusAlerts: return "summary_plus_alerts";
    case PolicyMode::RawPassthrough: return "raw_passthrough";
    }
    return "summary_only";
}

std::optional<PolicyMode> policy_mode_from_name(std::string_view name) {
    if (name == "summary_only") return PolicyMode::SummaryOnly;
    if (name == "summary_plus_alerts") return PolicyMode::SummaryPlusAlerts;
    if (name == "raw_passthrough") return PolicyMode::RawPassthrough;
    return std::nullopt;
}

BoundedStore::BoundedStore(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("gateway.capacity", "store capacity must be >= 1");
}

std::optional<std::string> BoundedStore::insert(SessionRecord record) {
    std::lock_guard lock(mutex_);
    const std::string id = record.session_id;
    if (by_id_.count(id)) throw DuplicateError("session '" + id + "' already stored");

    const auto key = std::make_pair(record.started_at_s, insert_counter_++);
    by_age_[key] = id;
    by_id_[id] = std::make_shared<const SessionRecord>(std::move(record));

    if (by_id_.size() <= capacity_) return std::nullopt;
    const auto oldest = by_age_.begin();
    std::string evicted = oldest->second;
    by_id_.erase(evicted);
    by_age_.erase(oldest);
    return evicted;
}

std::shared_ptr<const SessionRecord> BoundedStore::find(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = by_id_.find(session_id);
    return it == by_id_.end() ? nullptr : it->second;
}

std::size_t BoundedStore::size() const {
    std::lock_guard lock(mutex_);
    return by_id_.size();
}

std::optional<std::string> store_and_evict(BoundedStore& store, SessionRecord record) {
    return store.insert(std::move(record));
}

nlohmann::ordered_json summary_payload(const SessionSummary& summary) {
    nlohmann::ordered_json j;
    j["session_id"] = summary.session_id;
    j["device_id"] = summary.device_id;
    j["duration_s"] = summary.duration_s;
    j["total_taps"] = summary.total_taps;
    auto rounds = nlohmann::ordered_json::array();
    for (const auto& r : summary.rounds)
        rounds.push_back({{"label", r.label},
                          {"mean_freq_hz", r.mean_freq_hz},
                          {"max_freq_hz", r.max_freq_hz},
                          {"tap_count", r.tap_count}});
    j["rounds"] = std::move(rounds);
    j["summary_bytes"] = summary.summary_bytes;
    return j;
}

std::vector<cloud::CloudFrame> apply_forward_policy(const SessionSummary& summary,
                                                    const ForwardPolicy& policy,
                                                    const SessionRecord* record) {
    std::vector<cloud::CloudFrame> frames;
    cloud::CloudFrame head;
    head.event = "summary";
    head.session = summary.session_id;
    head.seq = 0;
    head.payload = summary_payload(summary);
    frames.push_back(std::move(head));

    if (policy.mode == PolicyMode::SummaryPlusAlerts) {
        for (const auto& r : summary.rounds) {
            if (r.mean_freq_hz >= policy.alert_freq_floor_hz) continue;
            cloud::CloudFrame alert;
            alert.event = "alert";
            alert.session = summary.session_id;
            alert.seq = frames.size();
            alert.payload["session"] = summary.session_id;
            alert.payload["round_label"] = r.label;
            alert.payload["mean_freq_hz"] = r.mean_freq_hz;
            alert.payload["floor_hz"] = policy.alert_freq_floor_hz;
            frames.push_back(std::move(alert));
        }
    } else if (policy.mode == PolicyMode::RawPassthrough && record != nullptr) {
        for (const auto& [channel, series] : record->series) {
            cloud::CloudFrame raw;
            raw.event = "raw";
            raw.session = summary.session_id;
            raw.seq = frames.size();
            raw.payload["channel"] = signal::channel_name(channel);
            auto samples = nlohmann::ordered_json::array();
            for (const auto& p : series.samples) samples.push_back({p.t_s, p.angle_deg});
            raw.payload["samples"] = std::move(samples);
            frames.push_back(std::move(raw));
        }
    }
    return frames;
}

std::size_t total_wire_bytes(const std::vector<cloud::CloudFrame>& frames) {
    std::size_t total = 0;
    for (const auto& f : frames) total += cloud::encode_frame(f).size();
    return total;
}

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)), store_(config_.capacity) {
    config_.sensor.validate();
}

std::shared_ptr<Gateway::DeviceState> Gateway::device_state(const std::string& device_id) {
    std::lock_guard lock(registry_mutex_);
    auto it = devices_.find(device_id);
    if (it != devices_.end()) return it->second;
    auto st = std::make_shared<DeviceState>();
    devices_[device_id] = st;
    return st;
}

void Gateway::open_session_locked(DeviceState& st, const std::string& device_id) {
    st.session_id = device_id + "-s" + std::to_string(st.session_counter++);
    st.expected_seq = 0;
    st.pending.clear();
    st.raw.clear();
    st.raw_bytes = 0;
    st.gap_count = 0;
    st.flagged = false;
    st.open = true;
    st.started_at_s = 0.0;
    st.samples = 0;
    std::lock_guard lock(registry_mutex_);
    open_session_device_[st.session_id] = device_id;
}

void Gateway::append_locked(DeviceState& st, const device::SamplePacket& packet) {
    if (st.samples == 0 && !packet.samples.empty())
        st.started_at_s = packet.samples.front().t_s;
    const auto bytes = device::packet_wire_bytes(packet);
    st.raw_bytes += bytes;
    total_raw_bytes_.fetch_add(bytes);
    for (const auto& s : packet.samples) {
        st.raw[s.channel].push_back(s);
        ++st.samples;
    }
    total_samples_.fetch_add(packet.samples.size());
}

Ack Gateway::ingest_packet(const device::SamplePacket& packet) {
    if (packet.samples.empty()) throw DomainError("packet batch must be nonempty");
    auto st = device_state(packet.device_id);
    std::lock_guard lock(st->mutex);
    if (!st->open) open_session_locked(*st, packet.device_id);

    if (packet.seq < st->expected_seq)
        return {true, st->expected_seq}; // duplicate, idempotent

    if (packet.seq == st->expected_seq) {
        append_locked(*st, packet);
        ++st->expected_seq;
        // Drain any buffered successors.
        for (auto it = st->pending.find(st->expected_seq); it != st->pending.end();
             it = st->pending.find(st->expected_seq)) {
            append_locked(*st, it->second);
            st->pending.erase(it);
            ++st->expected_seq;
        }
        return {true, st->expected_seq};
    }

    if (packet.seq - st->expected_seq <= config_.reorder_window) {
        st->pending.emplace(packet.seq, packet); // re-buffer of a dup is a no-op
        return {true, st->expected_seq};
    }

    // Gap beyond the window: keep the data, skip the hole, report.
    st->flagged = true;
    ++st->gap_count;
    for (auto& [seq, pkt] : st->pending) append_locked(*st, pkt);
    st->pending.clear();
    const auto expected = st->expected_seq;
    append_locked(*st, packet);
    st->expected_seq = packet.seq + 1;
    throw GapError("device '" + packet.device_id + "': seq jumped " +
                   std::to_string(expected) + " -> " + std::to_string(packet.seq) +
                   " beyond reorder window " + std::to_string(config_.reorder_window));
}

SessionSummary Gateway::close_session(const std::string& session_id,
                                      const device::TapProtocol& protocol) {
    protocol.validate();
    std::shared_ptr<DeviceState> st;
    std::string device_id;
    {
        std::lock_guard lock(registry_mutex_);
        auto it = open_session_device_.find(session_id);
        if (it == open_session_device_.end())
            throw NotFoundError("no open session '" + session_id + "'");
        device_id = it->second;
        st = devices_.at(device_id);
    }

    std::lock_guard lock(st->mutex);
    if (!st->open || st->session_id != session_id)
        throw NotFoundError("no open session '" + session_id + "'");
    // Out-of-order stragglers still count; append them with the hole left as is.
    for (auto& [seq, pkt] : st->pending) append_locked(*st, pkt);
    st->pending.clear();
    if (st->samples == 0) throw EmptySessionError("session '" + session_id + "' has no samples");

    SessionRecord record;
    record.session_id = session_id;
    record.device_id = device_id;
    record.started_at_s = st->started_at_s;
    record.raw_bytes_received = st->raw_bytes;
    record.flagged = st->flagged;
    record.gap_count = st->gap_count;

    for (const auto& [channel, raw] : st->raw) {
        signal::AngleSeries series;
        series.channel = channel;
        series.samples.reserve(raw.size());
        for (const auto& s : raw)
            series.samples.push_back(
                {s.t_s, signal::resistance_to_angle(
                            signal::voltage_to_resistance(s, config_.sensor), config_.sensor)});
        record.series[channel] =
            signal::condition_series(series, config_.analysis.conditioning);
    }

    // Tap analytics follow the index finger; fall back to whatever channel
    // the trace carries.
    const auto analytic = record.series.count(signal::Channel::Index)
                              ? signal::Channel::Index
                              : record.series.begin()->first;
    const auto events =
        signal::detect_taps(record.series.at(analytic), config_.analysis.threshold_deg,
                            config_.analysis.min_gap_s);

    SessionSummary summary;
    summary.session_id = session_id;
    summary.device_id = device_id;
    summary.duration_s = protocol.total_duration_s();
    double round_start = 0.0;
    for (const auto& r : protocol.rounds) {
        std::vector<signal::TapEvent> in_round;
        for (const auto& e : events)
            if (e.t_peak_s >= round_start && e.t_peak_s < round_start + r.duration_s) {
                auto rel = e;
                rel.t_peak_s -= round_start;
                in_round.push_back(rel);
            }

        RoundSummary rs;
        rs.label = r.label;
        rs.tap_count = in_round.size();
        const auto profile = signal::tap_frequency_profile(
            in_round, r.duration_s, config_.analysis.window_s, config_.analysis.hop_s);
        if (profile.points.empty()) {
            rs.mean_freq_hz = static_cast<double>(in_round.size()) / r.duration_s;
            rs.max_freq_hz = rs.mean_freq_hz;
        } else {
            double sum = 0.0;
            double maxv = 0.0;
            for (const auto& p : profile.points) {
                sum += p.freq_hz;
                maxv = std::max(maxv, p.freq_hz);
            }
            rs.mean_freq_hz = sum / static_cast<double>(profile.points.size());
            rs.max_freq_hz = maxv;
        }
        summary.rounds.push_back(std::move(rs));
        summary.total_taps += summary.rounds.back().tap_count;
        round_start += r.duration_s;
    }

    // Encoded size of the payload sans the summary_bytes member.
    auto sizing = summary_payload(summary);
    sizing.erase("summary_bytes");
    summary.summary_bytes = sizing.dump().size();

    record.status = SessionStatus::Closed;
    store_.insert(std::move(record));

    st->open = false;
    st->raw.clear();
    st->pending.clear();
    {
        std::lock_guard reg(registry_mutex_);
        open_session_device_.erase(session_id);
        summaries_[session_id] = summary;
    }
    return summary;
}

std::vector<cloud::CloudFrame> Gateway::forward_frames(const std::string& session_id) const {
    SessionSummary summary;
    {
        std::lock_guard lock(registry_mutex_);
        auto it = summaries_.find(session_id);
        if (it == summaries_.end())
            throw NotFoundError("no closed session '" + session_id + "'");
        summary = it->second;
    }
    const auto record = store_.find(session_id);
    return apply_forward_policy(summary, config_.policy, record.get());
}

std::string Gateway::open_session_id(const std::string& device_id) const {
    std::shared_ptr<DeviceState> st;
    {
        std::lock_guard lock(registry_mutex_);
        auto it = devices_.find(device_id);
        if (it != devices_.end()) st = it->second;
    }
    if (st) {
        std::lock_guard lock(st->mutex);
        if (st->open) return st->session_id;
    }
    throw NotFoundError("device '" + device_id + "' has no open session");
}

std::uint64_t Gateway::raw_bytes_total() const { return total_raw_bytes_.load(); }

std::uint64_t Gateway::samples_ingested() const { return total_samples_.load(); }

} // namespace fogpipe::gateway
