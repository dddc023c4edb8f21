#pragma once

#include <optional>
#include <string>

#include "etnet/runconfig.hpp"

namespace etnet {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::string model_path;
    std::string data_path;
    std::string truth_path;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    int window_id = -1; // attribute target
    int n_points = 0;   // attribute grid override (0 -> config)
};

// Commands throw UsageError / ParseError for bad input (exit 2) and other
// exceptions for runtime failures (exit 1); run_cli maps them.
void cmd_synth(const CliOptions& opt);
void cmd_train(const CliOptions& opt);
void cmd_score(const CliOptions& opt);
void cmd_cluster(const CliOptions& opt);
void cmd_eval(const CliOptions& opt);
void cmd_attribute(const CliOptions& opt);
void cmd_export_latent(const CliOptions& opt);

int run_cli(int argc, const char* const* argv);

} // namespace etnet
