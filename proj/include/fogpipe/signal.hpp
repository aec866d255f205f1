#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fogpipe/errors.hpp"

namespace fogpipe::signal {

// Finger channel of the glove. Exactly two sensors exist.
enum class Channel { Index, Thumb };

std::string_view channel_name(Channel c);
std::optional<Channel> channel_from_name(std::string_view name);

// One raw ADC reading: seconds since session start and volts at the divider tap.
struct FlexSample {
    double t_s = 0.0;
    Channel channel = Channel::Index;
    double voltage_v = 0.0;
};

// Electrical and calibration constants of one flex sensor. The sensor is the
// upper leg of a voltage divider and the output is measured across r_fixed_ohm,
// so v_out = vin * r_fixed / (r_fixed + r_flex). Angle is a linear map between
// the two calibration resistances, clamped to [0, angle_max_deg].
struct FlexSensorSpec {
    double vin_v = 5.0;
    double r_fixed_ohm = 10'000.0;
    double r_flat_ohm = 25'000.0;   // resistance at 0 degrees
    double r_bent_ohm = 100'000.0;  // resistance at angle_max_deg
    double angle_max_deg = 90.0;
    double thickness_mm = 6.35;     // metadata only
    double active_fraction = 0.8486; // metadata only

    void validate() const; // throws ConfigError on a broken spec
};

struct AnglePoint {
    double t_s = 0.0;
    double angle_deg = 0.0;
};

// Bend-angle time series for one channel; timestamps strictly increasing.
struct AngleSeries {
    Channel channel = Channel::Index;
    std::vector<AnglePoint> samples;
};

// One detected tap: time and conditioned amplitude of the local maximum.
struct TapEvent {
    double t_peak_s = 0.0;
    double amplitude_deg = 0.0;
    Channel channel = Channel::Index;
};

struct FreqPoint {
    double t_center_s = 0.0;
    double freq_hz = 0.0;
};

// Windowed tap-rate estimate: freq = taps-in-window / window_s.
struct FrequencyProfile {
    double window_s = 0.0;
    std::vector<FreqPoint> points;
};

struct ConditionParams {
    double clip_max_deg = 90.0;
    int smooth_window_n = 5; // centered moving average width, odd, >= 1
};

// Analysis defaults used by the gateway; every field configurable.
struct AnalysisParams {
    double threshold_deg = 15.0;
    double min_gap_s = 0.1;
    double window_s = 2.0;
    double hop_s = 1.0;
    ConditionParams conditioning{};
};

// Divider inversion: r_flex = r_fixed * (vin - v_out) / v_out.
// voltage <= 0 -> OpenCircuitError, voltage > vin -> OutOfRangeError.
double voltage_to_resistance(const FlexSample& sample, const FlexSensorSpec& spec);

// Linear interpolation r_flat -> 0 deg, r_bent -> angle_max, clamped.
double resistance_to_angle(double r_ohm, const FlexSensorSpec& spec);

// Forward direction of the same model, used by the device simulator.
// The angle is clamped into [0, angle_max_deg] before mapping.
double angle_to_resistance(double angle_deg, const FlexSensorSpec& spec);
double angle_to_voltage(double angle_deg, const FlexSensorSpec& spec);

// Clip to [0, clip_max_deg] then centered moving average of width
// smooth_window_n (edge windows shrink). Length and timestamps unchanged.
AngleSeries condition_series(const AngleSeries& series, const ConditionParams& params);

// Threshold peak detector with hysteresis: a tap arms when the signal rises
// to >= threshold, tracks its running maximum, and is emitted once the signal
// falls below threshold/2; the next tap cannot arm before that. Emitted taps
// closer than min_gap_s to the previous one are dropped (refractory).
std::vector<TapEvent> detect_taps(const AngleSeries& series, double threshold_deg,
                                  double min_gap_s);

// Tap-rate profile over windows [k*hop, k*hop + window) that fit inside
// [0, session_len_s]. Empty windows report 0 Hz.
FrequencyProfile tap_frequency_profile(const std::vector<TapEvent>& events,
                                       double session_len_s, double window_s,
                                       double hop_s);

} // namespace fogpipe::signal
