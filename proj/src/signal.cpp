#include "fogpipe/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fogpipe::signal {

std::string_view channel_name(Channel c) {
    return c == Channel::Index ? "index" : "thumb";
}

std::optional<Channel> channel_from_name(std::string_view name) {
    if (name == "index") return Channel::Index;
    if (name == "thumb") return Channel::Thumb;
    return std::nullopt;
}

void FlexSensorSpec::validate() const {
    if (vin_v <= 0.0) throw ConfigError("sensor.vin_v", "vin_v must be > 0");
    if (r_fixed_ohm <= 0.0) throw ConfigError("sensor.r_fixed_ohm", "r_fixed_ohm must be > 0");
    if (r_flat_ohm <= 0.0) throw ConfigError("sensor.r_flat_ohm", "r_flat_ohm must be > 0");
    if (r_bent_ohm <= 0.0) throw ConfigError("sensor.r_bent_ohm", "r_bent_ohm must be > 0");
    if (r_flat_ohm == r_bent_ohm)
        throw ConfigError("sensor.r_bent_ohm", "r_flat_ohm and r_bent_ohm must differ");
    if (angle_max_deg <= 0.0) throw ConfigError("sensor.angle_max_deg", "angle_max_deg must be > 0");
    if (active_fraction <= 0.0 || active_fraction > 1.0)
        throw ConfigError("sensor.active_fraction", "active_fraction must be in (0, 1]");
}

double voltage_to_resistance(const FlexSample& sample, const FlexSensorSpec& spec) {
    const double v = sample.voltage_v;
    if (v <= 0.0)
        throw OpenCircuitError("voltage <= 0 V reads as an open divider");
    if (v > spec.vin_v)
        throw OutOfRangeError("voltage exceeds the supply rail");
    return spec.r_fixed_ohm * (spec.vin_v - v) / v;
}

double resistance_to_angle(double r_ohm, const FlexSensorSpec& spec) {
    const double t = (r_ohm - spec.r_flat_ohm) / (spec.r_bent_ohm - spec.r_flat_ohm);
    return std::clamp(t, 0.0, 1.0) * spec.angle_max_deg;
}

double angle_to_resistance(double angle_deg, const FlexSensorSpec& spec) {
    const double t = std::clamp(angle_deg / spec.angle_max_deg, 0.0, 1.0);
    return spec.r_flat_ohm + t * (spec.r_bent_ohm - spec.r_flat_ohm);
}

double angle_to_voltage(double angle_deg, const FlexSensorSpec& spec) {
    const double r = angle_to_resistance(angle_deg, spec);
    return spec.vin_v * spec.r_fixed_ohm / (spec.r_fixed_ohm + r);
}

AngleSeries condition_series(const AngleSeries& series, const ConditionParams& params) {
    if (params.smooth_window_n < 1 || params.smooth_window_n % 2 == 0)
        throw DomainError("smooth_window_n must be odd and >= 1");
    if (params.clip_max_deg <= 0.0)
        throw DomainError("clip_max_deg must be > 0");

    AngleSeries out;
    out.channel = series.channel;
    const auto n = static_cast<std::ptrdiff_t>(series.samples.size());
    if (n == 0) return out;

    std::vector<double> clipped(series.samples.size());
    for (std::ptrdiff_t i = 0; i < n; ++i)
        clipped[static_cast<std::size_t>(i)] =
            std::clamp(series.samples[static_cast<std::size_t>(i)].angle_deg, 0.0,
                       params.clip_max_deg);

    const std::ptrdiff_t half = params.smooth_window_n / 2;
    out.samples.resize(series.samples.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        double sum = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) sum += clipped[static_cast<std::size_t>(j)];
        out.samples[static_cast<std::size_t>(i)] = {
            series.samples[static_cast<std::size_t>(i)].t_s,
            sum / static_cast<double>(hi - lo + 1)};
    }
    return out;
}

std::vector<TapEvent> detect_taps(const AngleSeries& series, double threshold_deg,
                                  double min_gap_s) {
    if (threshold_deg <= 0.0) throw DomainError("threshold_deg must be > 0");
    if (min_gap_s < 0.0) throw DomainError("min_gap_s must be >= 0");

    std::vector<TapEvent> events;
    const double rearm_level = threshold_deg / 2.0;
    bool tracking = false;
    double peak_val = 0.0;
    double peak_t = 0.0;
    double last_emit_t = -std::numeric_limits<double>::infinity();

    auto emit = [&] {
        if (peak_t - last_emit_t >= min_gap_s) {
            events.push_back({peak_t, peak_val, series.channel});
            last_emit_t = peak_t;
        }
        tracking = false;
    };

    for (const auto& p : series.samples) {
        if (!tracking) {
            if (p.angle_deg >= threshold_deg) {
                tracking = true;
                peak_val = p.angle_deg;
                peak_t = p.t_s;
            }
        } else {
            if (p.angle_deg > peak_val) {
                peak_val = p.angle_deg;
                peak_t = p.t_s;
            }
            if (p.angle_deg < rearm_level) emit();
        }
    }
    if (tracking) emit(); // series ended mid-tap; the maximum is still a tap
    return events;
}

FrequencyProfile tap_frequency_profile(const std::vector<TapEvent>& events,
                                       double session_len_s, double window_s,
                                       double hop_s) {
    if (session_len_s <= 0.0) throw InvalidSessionError("session_len_s must be > 0");
    if (window_s <= 0.0) throw DomainError("window_s must be > 0");
    if (hop_s <= 0.0) throw DomainError("hop_s must be > 0");

    FrequencyProfile profile;
    profile.window_s = window_s;
    const double eps = 1e-9;
    for (std::size_t k = 0;; ++k) {
        const double start = static_cast<double>(k) * hop_s;
        if (start + window_s > session_len_s + eps) break;
        std::size_t count = 0;
        for (const auto& e : events)
            if (e.t_peak_s >= start && e.t_peak_s < start + window_s) ++count;
        profile.points.push_back({start + window_s / 2.0,
                                  static_cast<double>(count) / window_s});
    }
    return profile;
}

} // namespace fogpipe::signal
