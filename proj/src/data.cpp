#include "etnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace etnet {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

WaveKind wave_kind_from_string(const std::string& s) {
    if (s == "sine") return WaveKind::Sine;
    if (s == "square") return WaveKind::Square;
    if (s == "triangle") return WaveKind::Triangle;
    throw UsageError("unknown wave kind '" + s + "' (expected sine|square|triangle)");
}

TimeSeries gen_wave(WaveKind kind, int length, double period, double phase, double awgn_sigma,
                    std::uint64_t seed) {
    if (length < 1) throw UsageError("gen_wave: length must be >= 1");
    if (period < 2.0) throw UsageError("gen_wave: period must be >= 2 samples");
    Rng rng(seed);
    TimeSeries ts;
    ts.values.resize(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) {
        double theta = kTwoPi * t / period + phase;
        double v = 0.0;
        switch (kind) {
        case WaveKind::Sine:
            v = std::sin(theta);
            break;
        case WaveKind::Square:
            v = std::sin(theta) >= 0.0 ? 1.0 : -1.0;
            break;
        case WaveKind::Triangle:
            v = 2.0 / 3.14159265358979323846 * std::asin(std::sin(theta));
            break;
        }
        if (awgn_sigma > 0.0) v += rng.normal(0.0, awgn_sigma);
        ts.values[static_cast<std::size_t>(t)] = v;
    }
    return ts;
}

TimeSeries compose_events(const std::vector<EventSpec>& events) {
    if (events.empty()) throw UsageError("compose_events: no events");
    std::size_t len = events[0].indicator.size();
    TimeSeries ts;
    ts.values.assign(len, 0.0);
    for (const EventSpec& e : events) {
        if (e.indicator.size() != len || e.intensity.size() != len)
            throw ShapeError("compose_events: event sequences must share length");
        for (std::size_t t = 0; t < len; ++t)
            ts.values[t] += e.intensity[t] * (e.indicator[t] ? 1.0 : 0.0);
    }
    return ts;
}

EventSpec make_mtc_events(int length, int period, double intensity, std::uint64_t seed) {
    if (period < 1) throw UsageError("make_mtc_events: period must be >= 1");
    Rng rng(seed);
    EventSpec e;
    e.kind = EventSpec::Kind::Mtc;
    e.indicator.assign(static_cast<std::size_t>(length), 0);
    e.intensity.assign(static_cast<std::size_t>(length), 0.0);
    int offset = static_cast<int>(rng.index(static_cast<std::uint64_t>(period)));
    for (int t = offset; t < length; t += period) {
        e.indicator[static_cast<std::size_t>(t)] = 1;
        e.intensity[static_cast<std::size_t>(t)] = intensity * rng.uniform(0.8, 1.2);
    }
    return e;
}

EventSpec make_htc_events(int length, int n_bursts, int burst_len, double intensity,
                          std::uint64_t seed) {
    Rng rng(seed);
    EventSpec e;
    e.kind = EventSpec::Kind::Htc;
    e.indicator.assign(static_cast<std::size_t>(length), 0);
    e.intensity.assign(static_cast<std::size_t>(length), 0.0);
    for (int b = 0; b < n_bursts; ++b) {
        int start = static_cast<int>(rng.index(static_cast<std::uint64_t>(
            std::max(1, length - burst_len))));
        double level = intensity * rng.uniform(0.7, 1.3);
        for (int t = start; t < std::min(length, start + burst_len); ++t) {
            e.indicator[static_cast<std::size_t>(t)] = 1;
            e.intensity[static_cast<std::size_t>(t)] = level;
        }
    }
    return e;
}

TimeSeries inject_anomaly(const TimeSeries& x, const AnomalySpec& spec, std::uint64_t seed) {
    int len = static_cast<int>(x.values.size());
    if (spec.location < 0 || spec.span < 1 || spec.location + spec.span > len)
        throw UsageError("inject_anomaly: span out of range");
    Rng rng(seed);
    TimeSeries out = x;
    switch (spec.type) {
    case 1: // strong local additive white Gaussian noise
        for (int t = spec.location; t < spec.location + spec.span; ++t)
            out.values[static_cast<std::size_t>(t)] += rng.normal(0.0, spec.magnitude);
        break;
    case 2: // unusually high activity over a short span
        for (int t = spec.location; t < spec.location + spec.span; ++t)
            out.values[static_cast<std::size_t>(t)] += spec.magnitude;
        break;
    case 3: // breakdown
        for (int t = spec.location; t < spec.location + spec.span; ++t)
            out.values[static_cast<std::size_t>(t)] = 0.0;
        break;
    case 4: // single impulse
        out.values[static_cast<std::size_t>(spec.location)] += spec.magnitude;
        break;
    default:
        throw UsageError("inject_anomaly: type must be 1..4");
    }
    return out;
}

TimeSeries apply_noise(const TimeSeries& x, const NoiseSpec& spec, std::uint64_t seed) {
    int len = static_cast<int>(x.values.size());
    Rng rng(seed);
    TimeSeries out;
    out.interval = x.interval;
    switch (spec.type) {
    case 1: { // increase sampling rate: linear interpolation onto a finer grid
        double f = spec.parameter;
        if (f < 1.0) throw UsageError("apply_noise: upsample factor must be >= 1");
        int new_len = static_cast<int>(std::floor((len - 1) * f)) + 1;
        out.values.resize(static_cast<std::size_t>(new_len));
        out.interval = x.interval / f;
        for (int j = 0; j < new_len; ++j) {
            double pos = j / f;
            int i0 = static_cast<int>(std::floor(pos));
            int i1 = std::min(len - 1, i0 + 1);
            double w = pos - i0;
            out.values[static_cast<std::size_t>(j)] =
                (1.0 - w) * x.values[static_cast<std::size_t>(i0)] +
                w * x.values[static_cast<std::size_t>(i1)];
        }
        break;
    }
    case 2: { // decrease sampling rate: decimation
        int f = static_cast<int>(spec.parameter);
        if (f < 1) throw UsageError("apply_noise: downsample factor must be >= 1");
        if (f > len) throw UsageError("apply_noise: downsample factor exceeds series length");
        out.interval = x.interval * f;
        for (int t = 0; t < len; t += f) out.values.push_back(x.values[static_cast<std::size_t>(t)]);
        break;
    }
    case 3: { // circular shift
        int s = static_cast<int>(spec.parameter) % std::max(1, len);
        if (s < 0) s += len;
        out.values.resize(static_cast<std::size_t>(len));
        for (int t = 0; t < len; ++t)
            out.values[static_cast<std::size_t>((t + s) % len)] = x.values[static_cast<std::size_t>(t)];
        break;
    }
    case 4: { // global additive Gaussian noise
        out = x;
        for (double& v : out.values) v += rng.normal(0.0, spec.parameter);
        break;
    }
    default:
        throw UsageError("apply_noise: type must be 1..4");
    }
    return out;
}

TimeSeries resample(const TimeSeries& x, double new_interval) {
    if (new_interval <= 0.0) throw UsageError("resample: interval must be positive");
    if (new_interval == x.interval) return x;
    int len = static_cast<int>(x.values.size());
    double duration = (len - 1) * x.interval;
    int new_len = static_cast<int>(std::floor(duration / new_interval)) + 1;
    TimeSeries out;
    out.interval = new_interval;
    out.values.resize(static_cast<std::size_t>(std::max(1, new_len)));
    for (int j = 0; j < static_cast<int>(out.values.size()); ++j) {
        double pos = j * new_interval / x.interval;
        int i0 = std::min(len - 1, static_cast<int>(std::floor(pos)));
        int i1 = std::min(len - 1, i0 + 1);
        double w = pos - i0;
        out.values[static_cast<std::size_t>(j)] =
            (1.0 - w) * x.values[static_cast<std::size_t>(i0)] +
            w * x.values[static_cast<std::size_t>(i1)];
    }
    return out;
}

std::vector<TimeSeries> window_series(const TimeSeries& x, double window_len, double bin_len) {
    if (window_len <= 0.0 || bin_len <= 0.0)
        throw UsageError("window_series: lengths must be positive");
    if (std::abs(bin_len - x.interval) > 1e-9 * std::max(1.0, x.interval))
        throw UsageError("window_series: bin length must match the sampling interval");
    int per_window = static_cast<int>(std::floor(window_len / bin_len + 0.5));
    if (per_window < 1) throw UsageError("window_series: window shorter than one bin");
    std::vector<TimeSeries> out;
    int len = static_cast<int>(x.values.size());
    for (int start = 0; start + per_window <= len; start += per_window) {
        TimeSeries w;
        w.interval = x.interval;
        w.values.assign(x.values.begin() + start, x.values.begin() + start + per_window);
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, int line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("malformed numeric field '" + s + "'", line_no);
    }
}

int parse_int(const std::string& s, int line_no) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("malformed integer field '" + s + "'", line_no);
    }
}

} // namespace

WindowSet load_window_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    WindowSet set;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    bool has_id = false, has_label = false;
    bool long_format = false;

    // Long-format accumulation: series id -> values in row order.
    std::vector<std::pair<int, Vec>> series;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields = split_csv(line);
        if (!header_seen) {
            header_seen = true;
            if (!fields.empty() && (fields[0] == "series_id" || fields[0] == "series-id")) {
                long_format = true;
                continue;
            }
            if (!fields.empty() && (fields[0] == "window_id" || fields[0] == "window-id")) {
                has_id = true;
                has_label = fields.size() > 1 && fields[1] == "label";
                continue;
            }
            // headerless wide format: fall through and parse as data
        }
        if (long_format) {
            if (fields.size() != 3) throw ParseError("expected series_id,timestamp,value", line_no);
            int sid = parse_int(fields[0], line_no);
            double val = parse_double(fields[2], line_no);
            auto it = std::find_if(series.begin(), series.end(),
                                   [&](const auto& p) { return p.first == sid; });
            if (it == series.end()) {
                series.push_back({sid, Vec{val}});
            } else {
                it->second.push_back(val);
            }
            continue;
        }
        std::size_t first_value = 0;
        int id = static_cast<int>(set.windows.size());
        int label = 0;
        bool row_has_label = has_label;
        if (has_id) {
            id = parse_int(fields[0], line_no);
            first_value = row_has_label ? 2 : 1;
            if (row_has_label) label = parse_int(fields[1], line_no);
        }
        if (fields.size() <= first_value) throw ParseError("row has no values", line_no);
        Vec values;
        values.reserve(fields.size() - first_value);
        for (std::size_t i = first_value; i < fields.size(); ++i)
            values.push_back(parse_double(fields[i], line_no));
        set.windows.push_back(std::move(values));
        set.ids.push_back(id);
        if (has_label) set.labels.push_back(label);
    }

    if (long_format) {
        for (auto& [sid, values] : series) {
            set.windows.push_back(std::move(values));
            set.ids.push_back(sid);
        }
    }
    return set;
}

std::vector<TimeSeries> load_windows(const std::string& path) {
    WindowSet set = load_window_set(path);
    std::vector<TimeSeries> out;
    out.reserve(set.windows.size());
    for (Vec& w : set.windows) out.push_back(TimeSeries{std::move(w), 1.0});
    return out;
}

void save_window_set(const std::string& path, const WindowSet& set) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# format=etnet-windows.v1\n";
    bool labels = !set.labels.empty();
    out << (labels ? "window_id,label" : "window_id");
    std::size_t width = set.windows.empty() ? 0 : set.windows[0].size();
    for (std::size_t i = 0; i < width; ++i) out << ",v" << i;
    out << '\n';
    out.precision(17);
    for (std::size_t r = 0; r < set.windows.size(); ++r) {
        out << set.ids[r];
        if (labels) out << ',' << set.labels[r];
        for (double v : set.windows[r]) out << ',' << v;
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace etnet
