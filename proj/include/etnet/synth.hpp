#pragma once

#include <cstdint>
#include <string>

#include "etnet/data.hpp"

namespace etnet {

// Synthetic benchmark builder: three wave classes with AWGN and optional
// phase jitter, four anomaly types for the detection protocol, and an
// event-composed variant for attribution demos.
struct SynthSpec {
    std::string kind = "waves-anomaly"; // waves-anomaly | waves-cluster | events
    std::uint64_t seed = 7;
    int length = 120;
    double period = 24.0;
    int copies = 500;          // per wave class
    double awgn_sigma = 0.05;
    bool phase_jitter = true;
    int test_normals = 100;
    int anomalies_per_type = 100;

    // Anomaly magnitudes relative to the unit wave amplitude; spans as
    // fractions of the window length.
    double type1_sigma_scale = 3.0;
    double type1_span_frac = 0.10;
    double type2_scale = 5.0;
    double type2_span_frac = 0.05;
    double type3_span_frac = 0.20;
    double type4_scale = 5.0;

    // events kind
    int event_windows = 200;
    int mtc_period = 5;
    double mtc_intensity = 0.2;
    int htc_bursts = 2;
    int htc_burst_len = 6;
    double htc_intensity = 1.0;

    // Fraction of training windows turned into anomalies (contamination
    // protocol); 0 keeps the training set clean.
    double contamination = 0.0;

    void validate() const;
};

struct SynthData {
    WindowSet train; // labels: wave class (0..2), or 0 for events
    WindowSet test;  // labels: 0 normal, 1..4 anomaly type (waves-anomaly),
                     // wave class (waves-cluster)
};

SynthData make_synthetic(const SynthSpec& spec);

// One randomized anomaly of the given type on top of a clean window.
Vec make_anomalous_window(const SynthSpec& spec, const Vec& clean, int type, Rng& rng);

} // namespace etnet
