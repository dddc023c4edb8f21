#include "etnet/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "etnet/metrics.hpp"
#include "etnet/model_io.hpp"
#include "etnet/tasks.hpp"
#include "etnet/training.hpp"

namespace etnet {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig load_config(const CliOptions& opt, bool required) {
    RunConfig rc;
    if (!opt.config_path.empty()) {
        rc = RunConfig::from_file(opt.config_path);
    } else if (required) {
        throw UsageError("this command needs --config");
    }
    std::optional<std::uint64_t> config_seed;
    if (!opt.config_path.empty()) config_seed = rc.seed;
    rc.seed = resolve_seed(opt.seed, config_seed);
    rc.train.seed = rc.seed;
    if (!opt.out_dir.empty()) rc.out_dir = opt.out_dir;
    return rc;
}

std::string out_path(const RunConfig& rc, const std::string& name) {
    if (rc.out_dir.empty()) return name;
    fs::create_directories(rc.out_dir);
    return (fs::path(rc.out_dir) / name).string();
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string("missing ") + what);
    if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path);
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

struct ScoredWindows {
    std::vector<int> ids;
    std::vector<BranchEnergies> energies;
};

ScoredWindows score_windows(const EtNetModel& model, const WindowSet& set) {
    ScoredWindows out;
    out.ids = set.ids;
    out.energies.reserve(set.windows.size());
    for (const Vec& w : set.windows) out.energies.push_back(branch_energies(model, w));
    return out;
}

} // namespace

void cmd_synth(const CliOptions& opt) {
    RunConfig rc = load_config(opt, true);
    if (!rc.has_synth) throw UsageError("config has no 'synth' section");
    SynthSpec spec = rc.synth;
    if (opt.seed) spec.seed = *opt.seed;

    SynthData data = make_synthetic(spec);
    std::string train_path = out_path(rc, "train.csv");
    std::string test_path = out_path(rc, "test.csv");
    save_window_set(train_path, data.train);
    save_window_set(test_path, data.test);

    json manifest{{"format_version", 1},
                  {"kind", "etnet-synth-manifest"},
                  {"seed", spec.seed},
                  {"synth", json{{"kind", spec.kind},
                                 {"length", spec.length},
                                 {"period", spec.period},
                                 {"copies", spec.copies},
                                 {"awgn_sigma", spec.awgn_sigma},
                                 {"phase_jitter", spec.phase_jitter},
                                 {"test_normals", spec.test_normals},
                                 {"anomalies_per_type", spec.anomalies_per_type},
                                 {"contamination", spec.contamination}}},
                  {"train_windows", data.train.windows.size()},
                  {"test_windows", data.test.windows.size()}};
    write_json_file(out_path(rc, "manifest.json"), manifest);
    if (!opt.quiet)
        std::cout << "wrote " << data.train.windows.size() << " training and "
                  << data.test.windows.size() << " test windows\n";
}

void cmd_train(const CliOptions& opt) {
    RunConfig rc = load_config(opt, true);
    std::string data_path = !opt.data_path.empty() ? opt.data_path : rc.train_data;
    require_file(data_path, "training data file");

    WindowSet set = load_window_set(data_path);
    if (set.windows.empty()) throw UsageError("training data has no windows");

    EtNetModel model = EtNetModel::init(rc.train);
    std::vector<LossReport> reports = train(model, set.windows, rc.train);

    save_model(out_path(rc, "model.json"), model);
    write_loss_csv(out_path(rc, "training_log.csv"), reports);
    if (!opt.quiet && !reports.empty()) {
        const LossReport& last = reports.back();
        std::cout << "trained " << rc.train.epochs << " epochs; final total loss " << last.total
                  << " (branch " << last.branch << ")\n";
    }
}

void cmd_score(const CliOptions& opt) {
    RunConfig rc = load_config(opt, false);
    require_file(opt.model_path, "model file (--model)");
    require_file(opt.data_path, "data file (--data)");
    EtNetModel model = load_model(opt.model_path);
    WindowSet set = load_window_set(opt.data_path);

    ScoredWindows scored = score_windows(model, set);
    std::string path = out_path(rc, "scores.csv");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# format=etnet-scores.v1\n";
    out << "window_id,E_W,E_D,y\n";
    out.precision(17);
    for (std::size_t i = 0; i < scored.ids.size(); ++i) {
        const BranchEnergies& e = scored.energies[i];
        out << scored.ids[i] << ',' << e.e_w << ',' << e.e_d << ',' << e.score() << '\n';
    }
    if (!opt.quiet) std::cout << "scored " << scored.ids.size() << " windows -> " << path << '\n';
}

void cmd_cluster(const CliOptions& opt) {
    RunConfig rc = load_config(opt, false);
    require_file(opt.model_path, "model file (--model)");
    require_file(opt.data_path, "data file (--data)");
    EtNetModel model = load_model(opt.model_path);
    WindowSet set = load_window_set(opt.data_path);

    std::string path = out_path(rc, "clusters.csv");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# format=etnet-clusters.v1\n";
    out << "window_id,branch,label\n";
    int k = model.cfg.gmm_k;
    for (std::size_t i = 0; i < set.windows.size(); ++i) {
        int label = cluster_label(model, set.windows[i]);
        out << set.ids[i] << ',' << (label < k ? 'W' : 'D') << ',' << label << '\n';
    }
    if (!opt.quiet)
        std::cout << "clustered " << set.windows.size() << " windows -> " << path << '\n';
}

void cmd_eval(const CliOptions& opt) {
    RunConfig rc = load_config(opt, false);
    require_file(opt.data_path, "predictions file (--data)");
    require_file(opt.truth_path, "truth file (--truth)");

    WindowSet truth = load_window_set(opt.truth_path);
    if (truth.labels.empty()) throw UsageError("truth file has no label column");

    std::ifstream in(opt.data_path);
    std::string line;
    bool is_scores = false, is_clusters = false;
    std::vector<std::pair<int, double>> preds; // id -> score or label
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!is_scores && !is_clusters) {
            if (line.rfind("window_id,E_W", 0) == 0) {
                is_scores = true;
                continue;
            }
            if (line.rfind("window_id,branch", 0) == 0) {
                is_clusters = true;
                continue;
            }
            throw UsageError("predictions file is neither a scores nor a clusters CSV");
        }
        std::size_t c1 = line.find(',');
        if (c1 == std::string::npos) throw ParseError("expected comma-separated row", line_no);
        int id = std::stoi(line.substr(0, c1));
        if (is_scores) {
            std::size_t last = line.rfind(',');
            preds.push_back({id, std::stod(line.substr(last + 1))});
        } else {
            std::size_t last = line.rfind(',');
            preds.push_back({id, static_cast<double>(std::stoi(line.substr(last + 1)))});
        }
    }
    if (preds.empty()) throw UsageError("predictions file has no rows");
    if (preds.size() != truth.ids.size())
        throw UsageError("predictions and truth have different row counts");

    json result{{"format_version", 1}, {"n", preds.size()}};
    if (is_scores) {
        std::vector<ScoredSample> samples;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i].first != truth.ids[i])
                throw UsageError("window id mismatch between predictions and truth");
            samples.push_back({preds[i].second, truth.labels[i] > 0 ? 1 : 0});
        }
        result["metric"] = "auc";
        result["value"] = auc(samples);
    } else {
        std::vector<int> a, b;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i].first != truth.ids[i])
                throw UsageError("window id mismatch between predictions and truth");
            a.push_back(static_cast<int>(preds[i].second));
            b.push_back(truth.labels[i]);
        }
        result["metric"] = "nmi";
        result["value"] = nmi(a, b);
    }
    result["config"] = json{{"predictions", opt.data_path}, {"truth", opt.truth_path}};
    std::string path = out_path(rc, "metrics.json");
    write_json_file(path, result);
    if (!opt.quiet)
        std::cout << result.at("metric").get<std::string>() << " = "
                  << result.at("value").get<double>() << '\n';
}

void cmd_attribute(const CliOptions& opt) {
    RunConfig rc = load_config(opt, false);
    require_file(opt.model_path, "model file (--model)");
    require_file(opt.data_path, "data file (--data)");
    if (opt.window_id < 0) throw UsageError("missing --id for the anomalous window");
    int n_points = opt.n_points > 0 ? opt.n_points : rc.attribution_points;

    EtNetModel model = load_model(opt.model_path);
    WindowSet set = load_window_set(opt.data_path);

    int target = -1;
    for (std::size_t i = 0; i < set.ids.size(); ++i)
        if (set.ids[i] == opt.window_id) target = static_cast<int>(i);
    if (target < 0)
        throw UsageError("window id " + std::to_string(opt.window_id) + " not in data file");

    double score = anomaly_score(model, set.windows[static_cast<std::size_t>(target)]);
    if (std::isfinite(model.threshold) && score <= model.threshold)
        throw UsageError("window " + std::to_string(opt.window_id) +
                         " does not score anomalous (score " + std::to_string(score) +
                         " <= threshold " + std::to_string(model.threshold) + ")");

    std::vector<LatentPair> refs;
    std::vector<int> ref_ids;
    for (std::size_t i = 0; i < set.windows.size(); ++i) {
        if (static_cast<int>(i) == target) continue;
        refs.push_back(latents(model, set.windows[i]));
        ref_ids.push_back(set.ids[i]);
    }
    AttributionResult res =
        attribute(model, set.windows[static_cast<std::size_t>(target)], refs, n_points);

    json refs_json = json::array();
    for (std::size_t i = 0; i < res.reference_ids.size(); ++i)
        refs_json.push_back(
            json{{"window_id", ref_ids[static_cast<std::size_t>(res.reference_ids[i])]},
                 {"latent", res.reference_latents[i]}});
    json out{{"format_version", 1},
             {"anomaly_id", opt.window_id},
             {"branch", std::string(1, res.branch)},
             {"alphas", res.alphas},
             {"z_anomaly", res.z_anomaly},
             {"z_center", res.z_center},
             {"references", refs_json}};
    std::string path = out_path(rc, "attribution.json");
    write_json_file(path, out);
    if (!opt.quiet)
        std::cout << "attribution for window " << opt.window_id << " -> " << path << '\n';
}

void cmd_export_latent(const CliOptions& opt) {
    RunConfig rc = load_config(opt, false);
    require_file(opt.model_path, "model file (--model)");
    require_file(opt.data_path, "data file (--data)");
    EtNetModel model = load_model(opt.model_path);
    WindowSet set = load_window_set(opt.data_path);

    std::string path = out_path(rc, "latents.csv");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# format=etnet-latents.v1\n";
    int d = model.cfg.effective_latent_dim() + 2;
    out << "window_id";
    for (int i = 0; i < d; ++i) out << ",zw_" << i;
    for (int i = 0; i < d; ++i) out << ",zd_" << i;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < set.windows.size(); ++i) {
        LatentPair lp = latents(model, set.windows[i]);
        out << set.ids[i];
        for (double v : lp.z_w) out << ',' << v;
        for (double v : lp.z_d) out << ',' << v;
        out << '\n';
    }
    if (!opt.quiet)
        std::cout << "exported " << set.windows.size() << " latent rows -> " << path << '\n';
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"ET-Net: task-aware similarity learning for event-triggered time series"};
    app.require_subcommand(1);

    CliOptions opt;
    std::uint64_t seed_value = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON run config");
        sub->add_option("--seed", seed_value, "seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--model", opt.model_path, "model JSON path");
        sub->add_option("--data", opt.data_path, "data CSV path");
        sub->add_flag("--quiet", opt.quiet, "suppress progress output");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth);
    CLI::App* train = app.add_subcommand("train", "train a model");
    add_common(train);
    CLI::App* score = app.add_subcommand("score", "anomaly-score windows");
    add_common(score);
    CLI::App* cluster = app.add_subcommand("cluster", "cluster-label windows");
    add_common(cluster);
    CLI::App* eval = app.add_subcommand("eval", "evaluate scores or labels against truth");
    add_common(eval);
    eval->add_option("--truth", opt.truth_path, "truth CSV with window_id,label");
    CLI::App* attr = app.add_subcommand("attribute", "explain an anomalous window");
    add_common(attr);
    attr->add_option("--id", opt.window_id, "window id of the anomaly");
    attr->add_option("--points", opt.n_points, "interpolation points on the reference line");
    CLI::App* exp = app.add_subcommand("export-latent", "export extended latents");
    add_common(exp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (seed_set) opt.seed = seed_value;

    try {
        if (synth->parsed()) cmd_synth(opt);
        else if (train->parsed()) cmd_train(opt);
        else if (score->parsed()) cmd_score(opt);
        else if (cluster->parsed()) cmd_cluster(opt);
        else if (eval->parsed()) cmd_eval(opt);
        else if (attr->parsed()) cmd_attribute(opt);
        else if (exp->parsed()) cmd_export_latent(opt);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace etnet
