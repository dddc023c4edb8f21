#include "etnet/model_io.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace etnet {

namespace {

using nlohmann::json;

constexpr int kGatePrefixLen = 512;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
    m.data = j.at("data").get<Vec>();
    if (m.data.size() != static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols))
        throw UsageError("model file: matrix payload size mismatch");
    return m;
}

json lstm_to_json(const LstmCell& c) {
    return json{{"w_o", matrix_to_json(c.w_o)}, {"w_f", matrix_to_json(c.w_f)},
                {"w_i", matrix_to_json(c.w_i)}, {"w_c", matrix_to_json(c.w_c)},
                {"b_o", c.b_o},                 {"b_f", c.b_f},
                {"b_i", c.b_i},                 {"b_c", c.b_c}};
}

LstmCell lstm_from_json(const json& j) {
    LstmCell c;
    c.w_o = matrix_from_json(j.at("w_o"));
    c.w_f = matrix_from_json(j.at("w_f"));
    c.w_i = matrix_from_json(j.at("w_i"));
    c.w_c = matrix_from_json(j.at("w_c"));
    c.b_o = j.at("b_o").get<Vec>();
    c.b_f = j.at("b_f").get<Vec>();
    c.b_i = j.at("b_i").get<Vec>();
    c.b_c = j.at("b_c").get<Vec>();
    return c;
}

json gru_to_json(const GruCell& c) {
    return json{{"w_u", matrix_to_json(c.w_u)}, {"w_h", matrix_to_json(c.w_h)},
                {"w_r", matrix_to_json(c.w_r)}, {"b_u", c.b_u},
                {"b_h", c.b_h},                 {"b_r", c.b_r}};
}

GruCell gru_from_json(const json& j) {
    GruCell c;
    c.w_u = matrix_from_json(j.at("w_u"));
    c.w_h = matrix_from_json(j.at("w_h"));
    c.w_r = matrix_from_json(j.at("w_r"));
    c.b_u = j.at("b_u").get<Vec>();
    c.b_h = j.at("b_h").get<Vec>();
    c.b_r = j.at("b_r").get<Vec>();
    return c;
}

std::string gate_prefix(const GateSchedule& g) {
    std::string s;
    s.reserve(kGatePrefixLen);
    for (int t = 0; t < kGatePrefixLen; ++t) {
        auto [w1, w2] = g.at(t);
        s += static_cast<char>('0' + (w1 == 1 && w2 == 1 ? 2 : (w2 == 1 ? 1 : 0)));
    }
    return s;
}

json srnn_to_json(const SrnnLayer& l) {
    json j;
    if (const LstmCell* c = std::get_if<LstmCell>(&l.cell)) {
        j["cell_type"] = "lstm";
        j["cell"] = lstm_to_json(*c);
    } else {
        j["cell_type"] = "gru";
        j["cell"] = gru_to_json(std::get<GruCell>(l.cell));
    }
    j["skip"] = l.skip;
    j["w_skip"] = matrix_to_json(l.w_skip);
    j["b_skip"] = l.b_skip;
    j["gate_seed"] = l.gates.seed;
    j["gates"] = gate_prefix(l.gates); // derived; stored for inspection
    return j;
}

SrnnLayer srnn_from_json(const json& j) {
    SrnnLayer l;
    if (j.at("cell_type").get<std::string>() == "lstm")
        l.cell = lstm_from_json(j.at("cell"));
    else
        l.cell = gru_from_json(j.at("cell"));
    l.skip = j.at("skip").get<int>();
    l.w_skip = matrix_from_json(j.at("w_skip"));
    l.b_skip = j.at("b_skip").get<Vec>();
    l.gates.seed = j.at("gate_seed").get<std::uint64_t>();
    if (j.contains("gates") && j.at("gates").get<std::string>() != gate_prefix(l.gates))
        throw UsageError("model file: stored gate schedule disagrees with its seed");
    return l;
}

json gmm_to_json(const GmmModel& g) {
    json sigmas = json::array();
    for (const Matrix& s : g.sigma) sigmas.push_back(matrix_to_json(s));
    return json{{"k", g.k},
                {"phi", g.phi},
                {"mu", g.mu},
                {"sigma", sigmas},
                {"reg_epsilon", g.reg_epsilon},
                {"memnet",
                 json{{"w1", matrix_to_json(g.memnet.w1)},
                      {"b1", g.memnet.b1},
                      {"w2", matrix_to_json(g.memnet.w2)},
                      {"b2", g.memnet.b2}}}};
}

GmmModel gmm_from_json(const json& j) {
    GmmModel g;
    g.k = j.at("k").get<int>();
    g.phi = j.at("phi").get<Vec>();
    g.mu = j.at("mu").get<std::vector<Vec>>();
    for (const json& s : j.at("sigma")) g.sigma.push_back(matrix_from_json(s));
    g.reg_epsilon = j.at("reg_epsilon").get<double>();
    const json& mn = j.at("memnet");
    g.memnet.w1 = matrix_from_json(mn.at("w1"));
    g.memnet.b1 = mn.at("b1").get<Vec>();
    g.memnet.w2 = matrix_from_json(mn.at("w2"));
    g.memnet.b2 = mn.at("b2").get<Vec>();
    return g;
}

json config_to_json(const TrainConfig& c) {
    return json{{"lambda", c.lambda},
                {"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"seed", c.seed},
                {"n_branches", c.n_branches},
                {"n_layers", c.n_layers},
                {"hidden_dim", c.hidden_dim},
                {"latent_dim", c.latent_dim},
                {"gmm_k", c.gmm_k},
                {"em_iters_per_epoch", c.em_iters_per_epoch},
                {"memnet_hidden", c.memnet_hidden},
                {"parallel_branches", c.parallel_branches}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.lambda = j.at("lambda").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_branches = j.at("n_branches").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.gmm_k = j.at("gmm_k").get<int>();
    c.em_iters_per_epoch = j.at("em_iters_per_epoch").get<int>();
    c.memnet_hidden = j.at("memnet_hidden").get<int>();
    c.parallel_branches = j.at("parallel_branches").get<bool>();
    return c;
}

} // namespace

std::string model_to_json(const EtNetModel& model) {
    json j;
    j["format_version"] = model.format_version;
    j["kind"] = "etnet-model";
    j["config"] = config_to_json(model.cfg);
    j["seed"] = model.cfg.seed;
    j["trained"] = model.trained;
    j["normalization"] = json{{"min", model.norm.min}, {"max", model.norm.max}};
    if (std::isfinite(model.threshold)) j["threshold"] = model.threshold;

    json branches = json::array();
    for (const WBranch& b : model.w_net.branches)
        branches.push_back(json{{"enc", srnn_to_json(b.enc)},
                                {"dec", srnn_to_json(b.dec)},
                                {"w_out", matrix_to_json(b.w_out)},
                                {"b_out", b.b_out}});
    j["w_net"] = json{{"branches", branches},
                      {"fusion_w", matrix_to_json(model.w_net.fusion_w)},
                      {"fusion_b", model.w_net.fusion_b},
                      {"latent_dim", model.w_net.latent_dim}};

    json enc_layers = json::array(), dec_layers = json::array();
    json dilations = json::array();
    for (const DilatedLayer& l : model.d_net.enc_layers) {
        enc_layers.push_back(json{{"cell", gru_to_json(l.cell)}, {"dilation", l.dilation}});
        dilations.push_back(l.dilation);
    }
    for (const DilatedLayer& l : model.d_net.dec_layers)
        dec_layers.push_back(json{{"cell", gru_to_json(l.cell)}, {"dilation", l.dilation}});
    j["d_net"] = json{{"enc_layers", enc_layers},
                      {"dec_layers", dec_layers},
                      {"dilations", dilations},
                      {"fusion_w", matrix_to_json(model.d_net.fusion_w)},
                      {"fusion_b", model.d_net.fusion_b},
                      {"w_out", matrix_to_json(model.d_net.w_out)},
                      {"b_out", model.d_net.b_out},
                      {"latent_dim", model.d_net.latent_dim}};

    j["w_gmm"] = gmm_to_json(model.w_gmm);
    j["d_gmm"] = gmm_to_json(model.d_gmm);
    return j.dump(2) + "\n";
}

EtNetModel model_from_json(const std::string& text) {
    json j = json::parse(text);
    int version = j.at("format_version").get<int>();
    if (version != 1)
        throw UsageError("incompatible model format version " + std::to_string(version) +
                         " (this build reads version 1)");
    if (j.at("kind").get<std::string>() != "etnet-model")
        throw UsageError("not an etnet model file");

    EtNetModel m;
    m.format_version = version;
    m.cfg = config_from_json(j.at("config"));
    m.trained = j.at("trained").get<bool>();
    m.norm.min = j.at("normalization").at("min").get<double>();
    m.norm.max = j.at("normalization").at("max").get<double>();
    m.threshold = j.contains("threshold") ? j.at("threshold").get<double>()
                                          : std::numeric_limits<double>::quiet_NaN();

    const json& wn = j.at("w_net");
    for (const json& bj : wn.at("branches")) {
        WBranch b;
        b.enc = srnn_from_json(bj.at("enc"));
        b.dec = srnn_from_json(bj.at("dec"));
        b.w_out = matrix_from_json(bj.at("w_out"));
        b.b_out = bj.at("b_out").get<Vec>();
        m.w_net.branches.push_back(std::move(b));
    }
    m.w_net.fusion_w = matrix_from_json(wn.at("fusion_w"));
    m.w_net.fusion_b = wn.at("fusion_b").get<Vec>();
    m.w_net.latent_dim = wn.at("latent_dim").get<int>();

    const json& dn = j.at("d_net");
    for (const json& lj : dn.at("enc_layers")) {
        DilatedLayer l;
        l.cell = gru_from_json(lj.at("cell"));
        l.dilation = lj.at("dilation").get<int>();
        m.d_net.enc_layers.push_back(std::move(l));
    }
    for (const json& lj : dn.at("dec_layers")) {
        DilatedLayer l;
        l.cell = gru_from_json(lj.at("cell"));
        l.dilation = lj.at("dilation").get<int>();
        m.d_net.dec_layers.push_back(std::move(l));
    }
    m.d_net.fusion_w = matrix_from_json(dn.at("fusion_w"));
    m.d_net.fusion_b = dn.at("fusion_b").get<Vec>();
    m.d_net.w_out = matrix_from_json(dn.at("w_out"));
    m.d_net.b_out = dn.at("b_out").get<Vec>();
    m.d_net.latent_dim = dn.at("latent_dim").get<int>();

    m.w_gmm = gmm_from_json(j.at("w_gmm"));
    m.d_gmm = gmm_from_json(j.at("d_gmm"));
    return m;
}

void save_model(const std::string& path, const EtNetModel& model) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << model_to_json(model);
    if (!out) throw IoError("write failed for " + path);
}

EtNetModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open model file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return model_from_json(text);
    } catch (const json::exception& e) {
        throw UsageError("malformed model file " + path + ": " + e.what());
    }
}

bool models_equal(const EtNetModel& a, const EtNetModel& b) {
    return model_to_json(a) == model_to_json(b);
}

} // namespace etnet
