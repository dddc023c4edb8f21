#include "etnet/synth.hpp"

#include <algorithm>
#include <cmath>

namespace etnet {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

WaveKind kClasses[3] = {WaveKind::Sine, WaveKind::Square, WaveKind::Triangle};
} // namespace

void SynthSpec::validate() const {
    if (kind != "waves-anomaly" && kind != "waves-cluster" && kind != "events")
        throw UsageError("synth: kind must be waves-anomaly, waves-cluster or events");
    if (length < 4) throw UsageError("synth: length must be >= 4");
    if (period < 2.0) throw UsageError("synth: period must be >= 2");
    if (copies < 0 || test_normals < 0 || anomalies_per_type < 0)
        throw UsageError("synth: counts must be >= 0");
    if (contamination < 0.0 || contamination >= 1.0)
        throw UsageError("synth: contamination must be in [0, 1)");
}

Vec make_anomalous_window(const SynthSpec& spec, const Vec& clean, int type, Rng& rng) {
    TimeSeries ts{clean, 1.0};
    int len = static_cast<int>(clean.size());
    auto span_of = [&](double frac) {
        return std::max(1, static_cast<int>(std::floor(frac * len)));
    };
    AnomalySpec a;
    a.type = type;
    switch (type) {
    case 1:
        a.magnitude = spec.type1_sigma_scale;
        a.span = span_of(spec.type1_span_frac);
        break;
    case 2:
        a.magnitude = spec.type2_scale;
        a.span = span_of(spec.type2_span_frac);
        break;
    case 3:
        a.magnitude = 0.0;
        a.span = span_of(spec.type3_span_frac);
        break;
    case 4:
        a.magnitude = spec.type4_scale;
        a.span = 1;
        break;
    default:
        throw UsageError("synth: anomaly type must be 1..4");
    }
    a.location = static_cast<int>(rng.index(static_cast<std::uint64_t>(len - a.span + 1)));
    return inject_anomaly(ts, a, rng.u64()).values;
}

namespace {

Vec normal_window(const SynthSpec& spec, int cls, Rng& rng) {
    double phase = spec.phase_jitter ? rng.uniform(0.0, kTwoPi) : 0.0;
    return gen_wave(kClasses[cls], spec.length, spec.period, phase, spec.awgn_sigma, rng.u64())
        .values;
}

Vec event_window(const SynthSpec& spec, Rng& rng) {
    std::vector<EventSpec> events;
    events.push_back(make_mtc_events(spec.length, spec.mtc_period, spec.mtc_intensity, rng.u64()));
    events.push_back(make_htc_events(spec.length, spec.htc_bursts, spec.htc_burst_len,
                                     spec.htc_intensity, rng.u64()));
    return compose_events(events).values;
}

} // namespace

SynthData make_synthetic(const SynthSpec& spec) {
    spec.validate();
    SynthData out;
    Rng rng(mix_seed(spec.seed, 0x5717));
    int next_id = 0;

    if (spec.kind == "events") {
        for (int i = 0; i < spec.event_windows; ++i) {
            out.train.windows.push_back(event_window(spec, rng));
            out.train.ids.push_back(next_id++);
            out.train.labels.push_back(0);
        }
        // Test set: a few normals plus extreme bursts as anomalies.
        for (int i = 0; i < spec.test_normals; ++i) {
            out.test.windows.push_back(event_window(spec, rng));
            out.test.ids.push_back(next_id);
            out.test.labels.push_back(0);
            ++next_id;
        }
        for (int i = 0; i < spec.anomalies_per_type; ++i) {
            Vec w = event_window(spec, rng);
            out.test.windows.push_back(make_anomalous_window(spec, w, 2, rng));
            out.test.ids.push_back(next_id);
            out.test.labels.push_back(2);
            ++next_id;
        }
        return out;
    }

    for (int cls = 0; cls < 3; ++cls) {
        for (int i = 0; i < spec.copies; ++i) {
            out.train.windows.push_back(normal_window(spec, cls, rng));
            out.train.ids.push_back(next_id++);
            out.train.labels.push_back(cls);
        }
    }

    if (spec.contamination > 0.0 && !out.train.windows.empty()) {
        int n = static_cast<int>(out.train.windows.size());
        int n_contaminate = static_cast<int>(std::floor(spec.contamination * n));
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        rng.shuffle(idx);
        for (int i = 0; i < n_contaminate; ++i) {
            int type = 1 + static_cast<int>(rng.index(4));
            Vec& w = out.train.windows[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            w = make_anomalous_window(spec, w, type, rng);
        }
    }

    if (spec.kind == "waves-cluster") {
        for (int cls = 0; cls < 3; ++cls) {
            for (int i = 0; i < spec.test_normals; ++i) {
                out.test.windows.push_back(normal_window(spec, cls, rng));
                out.test.ids.push_back(next_id++);
                out.test.labels.push_back(cls);
            }
        }
        return out;
    }

    // waves-anomaly test set
    for (int i = 0; i < spec.test_normals; ++i) {
        int cls = static_cast<int>(rng.index(3));
        out.test.windows.push_back(normal_window(spec, cls, rng));
        out.test.ids.push_back(next_id++);
        out.test.labels.push_back(0);
    }
    for (int type = 1; type <= 4; ++type) {
        for (int i = 0; i < spec.anomalies_per_type; ++i) {
            int cls = static_cast<int>(rng.index(3));
            Vec clean = normal_window(spec, cls, rng);
            out.test.windows.push_back(make_anomalous_window(spec, clean, type, rng));
            out.test.ids.push_back(next_id++);
            out.test.labels.push_back(type);
        }
    }
    return out;
}

} // namespace etnet
