#include "etnet/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

namespace etnet {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw UsageError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read_into(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError("config: bad type for '" + std::string(key) + "' in " + where);
    }
}

TrainConfig train_from_json(const json& j) {
    reject_unknown(j, {"lambda", "learning_rate", "epochs", "batch_size", "n_branches",
                       "n_layers", "hidden_dim", "latent_dim", "gmm_k", "em_iters_per_epoch",
                       "memnet_hidden", "parallel_branches"},
                   "train");
    TrainConfig c;
    read_into(j, "lambda", c.lambda, "train");
    read_into(j, "learning_rate", c.learning_rate, "train");
    read_into(j, "epochs", c.epochs, "train");
    read_into(j, "batch_size", c.batch_size, "train");
    read_into(j, "n_branches", c.n_branches, "train");
    read_into(j, "n_layers", c.n_layers, "train");
    read_into(j, "hidden_dim", c.hidden_dim, "train");
    read_into(j, "latent_dim", c.latent_dim, "train");
    read_into(j, "gmm_k", c.gmm_k, "train");
    read_into(j, "em_iters_per_epoch", c.em_iters_per_epoch, "train");
    read_into(j, "memnet_hidden", c.memnet_hidden, "train");
    read_into(j, "parallel_branches", c.parallel_branches, "train");
    return c;
}

SynthSpec synth_from_json(const json& j) {
    reject_unknown(j, {"kind", "seed", "length", "period", "copies", "awgn_sigma",
                       "phase_jitter", "test_normals", "anomalies_per_type",
                       "type1_sigma_scale", "type1_span_frac", "type2_scale", "type2_span_frac",
                       "type3_span_frac", "type4_scale", "event_windows", "mtc_period",
                       "mtc_intensity", "htc_bursts", "htc_burst_len", "htc_intensity",
                       "contamination"},
                   "synth");
    SynthSpec s;
    read_into(j, "kind", s.kind, "synth");
    read_into(j, "seed", s.seed, "synth");
    read_into(j, "length", s.length, "synth");
    read_into(j, "period", s.period, "synth");
    read_into(j, "copies", s.copies, "synth");
    read_into(j, "awgn_sigma", s.awgn_sigma, "synth");
    read_into(j, "phase_jitter", s.phase_jitter, "synth");
    read_into(j, "test_normals", s.test_normals, "synth");
    read_into(j, "anomalies_per_type", s.anomalies_per_type, "synth");
    read_into(j, "type1_sigma_scale", s.type1_sigma_scale, "synth");
    read_into(j, "type1_span_frac", s.type1_span_frac, "synth");
    read_into(j, "type2_scale", s.type2_scale, "synth");
    read_into(j, "type2_span_frac", s.type2_span_frac, "synth");
    read_into(j, "type3_span_frac", s.type3_span_frac, "synth");
    read_into(j, "type4_scale", s.type4_scale, "synth");
    read_into(j, "event_windows", s.event_windows, "synth");
    read_into(j, "mtc_period", s.mtc_period, "synth");
    read_into(j, "mtc_intensity", s.mtc_intensity, "synth");
    read_into(j, "htc_bursts", s.htc_bursts, "synth");
    read_into(j, "htc_burst_len", s.htc_burst_len, "synth");
    read_into(j, "htc_intensity", s.htc_intensity, "synth");
    read_into(j, "contamination", s.contamination, "synth");
    return s;
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config: top level must be an object");
    reject_unknown(j, {"format_version", "task", "seed", "out_dir", "data", "train", "synth",
                       "metrics", "attribution"},
                   "top level");

    RunConfig rc;
    read_into(j, "format_version", rc.format_version, "top level");
    if (rc.format_version != 1)
        throw UsageError("config: unsupported format_version " +
                         std::to_string(rc.format_version));
    read_into(j, "task", rc.task, "top level");
    if (rc.task != "anomaly" && rc.task != "cluster")
        throw UsageError("config: task must be 'anomaly' or 'cluster'");
    read_into(j, "seed", rc.seed, "top level");
    read_into(j, "out_dir", rc.out_dir, "top level");

    if (j.contains("data")) {
        const json& d = j.at("data");
        reject_unknown(d, {"train", "test", "truth"}, "data");
        read_into(d, "train", rc.train_data, "data");
        read_into(d, "test", rc.test_data, "data");
        read_into(d, "truth", rc.truth_data, "data");
    }
    if (j.contains("train")) rc.train = train_from_json(j.at("train"));
    if (j.contains("synth")) {
        rc.synth = synth_from_json(j.at("synth"));
        rc.has_synth = true;
    }
    if (j.contains("metrics")) {
        if (!j.at("metrics").is_array()) throw UsageError("config: metrics must be an array");
        for (const json& m : j.at("metrics")) {
            std::string name = m.get<std::string>();
            if (name != "auc" && name != "nmi")
                throw UsageError("config: unknown metric '" + name + "'");
        }
    }
    if (j.contains("attribution")) {
        const json& a = j.at("attribution");
        reject_unknown(a, {"n_points"}, "attribution");
        read_into(a, "n_points", rc.attribution_points, "attribution");
    }
    rc.train.seed = rc.seed;
    return rc;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           const std::optional<std::uint64_t>& config_seed) {
    if (flag_seed) return *flag_seed;
    if (config_seed) return *config_seed;
    if (const char* env = std::getenv("ETNET_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError("ETNET_SEED is not a valid integer");
        }
    }
    return 1;
}

} // namespace etnet
