#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "etnet/linalg.hpp"

namespace etnet {

struct TimeSeries {
    Vec values;
    double interval = 1.0; // seconds between samples
};

enum class WaveKind { Sine, Square, Triangle };

WaveKind wave_kind_from_string(const std::string& s);

// Unit-amplitude wave of `length` samples plus zero-mean Gaussian noise.
// Period and phase are in samples and radians respectively.
TimeSeries gen_wave(WaveKind kind, int length, double period, double phase, double awgn_sigma,
                    std::uint64_t seed);

struct EventSpec {
    enum class Kind { Mtc, Htc };
    std::vector<std::uint8_t> indicator; // e_i, length L
    Vec intensity;                       // a_i, length L
    Kind kind = Kind::Mtc;
};

// x = sum_i a_i (.) e_i.
TimeSeries compose_events(const std::vector<EventSpec>& events);

// Frequent small near-periodic spikes (background traffic).
EventSpec make_mtc_events(int length, int period, double intensity, std::uint64_t seed);
// Rare large bursts.
EventSpec make_htc_events(int length, int n_bursts, int burst_len, double intensity,
                          std::uint64_t seed);

struct AnomalySpec {
    int type = 1; // 1 local AWGN, 2 burst, 3 breakdown, 4 impulse
    double magnitude = 1.0;
    int location = 0;
    int span = 1;
};

TimeSeries inject_anomaly(const TimeSeries& x, const AnomalySpec& spec, std::uint64_t seed);

struct NoiseSpec {
    int type = 1; // 1 upsample, 2 downsample, 3 circular shift, 4 global AWGN
    double parameter = 1.0;
};

TimeSeries apply_noise(const TimeSeries& x, const NoiseSpec& spec, std::uint64_t seed);

// Linear-interpolation resample onto a new sampling grid spanning the same
// total duration.
TimeSeries resample(const TimeSeries& x, double new_interval);

// Non-overlapping windows of window_len/bin_len samples; the trailing partial
// window is dropped. bin_len must equal the series' sampling interval.
std::vector<TimeSeries> window_series(const TimeSeries& x, double window_len, double bin_len);

// Accepts two CSV layouts: wide (one window per row, optional window_id /
// label leading columns, detected from the header) and long
// (series_id,timestamp,value rows, windowed afterwards by the caller).
// Lines starting with '#' are ignored.
std::vector<TimeSeries> load_windows(const std::string& path);

// Wide layout with ids and labels; `labels` may be empty.
struct WindowSet {
    std::vector<Vec> windows;
    std::vector<int> ids;
    std::vector<int> labels;
};

WindowSet load_window_set(const std::string& path);
void save_window_set(const std::string& path, const WindowSet& set);

} // namespace etnet
