#pragma once

#include <optional>
#include <string>

#include "etnet/model.hpp"
#include "etnet/synth.hpp"

namespace etnet {

// Parsed experiment config. Schema-validated on load: wrong types and unknown
// keys are usage errors.
struct RunConfig {
    int format_version = 1;
    std::string task = "anomaly"; // anomaly | cluster
    std::uint64_t seed = 1;
    std::string out_dir;
    std::string train_data;
    std::string test_data;
    std::string truth_data;
    TrainConfig train;
    SynthSpec synth;
    bool has_synth = false;
    int attribution_points = 5;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text);
};

// Seed priority: CLI flag, config value, ETNET_SEED, default 1.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           const std::optional<std::uint64_t>& config_seed);

} // namespace etnet
