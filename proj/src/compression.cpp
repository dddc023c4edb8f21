#include "etnet/compression.hpp"

#include <cmath>

namespace etnet {

double d_rel(const Vec& x, const Vec& xr, bool* degenerate) {
    if (x.size() != xr.size()) throw ShapeError("d_rel: length mismatch");
    double nx = norm2(x);
    bool degen = nx <= 0.0;
    if (degenerate) *degenerate = degen;
    double denom = degen ? 1e-12 : nx;
    return std::sqrt(sum_sq_diff(x, xr)) / denom;
}

double d_cos(const Vec& x, const Vec& xr) {
    if (x.size() != xr.size()) throw ShapeError("d_cos: length mismatch");
    double nx = norm2(x);
    double nr = norm2(xr);
    if (nx <= 0.0 || nr <= 0.0) return 0.0;
    return dot(x, xr) / (nx * nr);
}

std::pair<int, int> select_branches(const Vec& rel_errors, const Vec& cos_sims) {
    if (rel_errors.empty() || rel_errors.size() != cos_sims.size())
        throw UsageError("select_branches: need one rel/cos value per branch");
    int i = 0, j = 0;
    for (std::size_t b = 1; b < rel_errors.size(); ++b) {
        if (rel_errors[b] < rel_errors[static_cast<std::size_t>(i)]) i = static_cast<int>(b);
        if (cos_sims[b] > cos_sims[static_cast<std::size_t>(j)]) j = static_cast<int>(b);
    }
    return {i, j};
}

namespace {

// d_rel on the tape; x is a constant, xr is live. The tiny additive guard
// keeps the sqrt differentiable when the reconstruction is exact.
int d_rel_node(Tape& tape, const Vec& x, int xr) {
    int xc = tape.constant(x);
    int diff = tape.sub(xc, xr);
    int ssq = tape.add_const(tape.sum_sq(diff), 1e-24);
    double nx = norm2(x);
    double denom = nx <= 0.0 ? 1e-12 : nx;
    return tape.scale(tape.sqrt(ssq), 1.0 / denom);
}

int d_cos_node(Tape& tape, const Vec& x, int xr) {
    double nx = norm2(x);
    Vec rec = tape.value_vec(xr);
    double nr = norm2(rec);
    if (nx <= 0.0 || nr <= 1e-150) return tape.constant(0.0);
    int xc = tape.constant(x);
    int num = tape.dot(xc, xr);
    int nr_node = tape.sqrt(tape.add_const(tape.sum_sq(xr), 1e-300));
    return tape.div(num, tape.scale(nr_node, nx));
}

// Runs one SRNN encoder over the window and returns the final state.
int run_srnn_encoder(Tape& tape, SrnnLayer& layer, const Vec& x) {
    SrnnHistory hist;
    hist.start(tape, layer.hidden());
    int h = hist.zero;
    for (std::size_t t = 0; t < x.size(); ++t) {
        int xt = tape.constant(x[t]);
        h = srnn_step(tape, layer, hist, static_cast<int>(t), xt);
    }
    return h;
}

// Decodes L steps autoregressively in reverse time order: the decoder state
// starts from the branch latent, consumes its previous scalar output, and the
// emitted sequence is flipped back to forward order.
int run_srnn_decoder(Tape& tape, WBranch& branch, int init_state, int len) {
    SrnnHistory hist;
    hist.start(tape, branch.dec.hidden());
    hist.init_h = init_state;
    int prev_out = tape.constant(0.0);
    std::vector<int> outputs(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
        int h = srnn_step(tape, branch.dec, hist, t, prev_out);
        prev_out = tape.affine(tape.param(branch.w_out), tape.param(branch.b_out), h);
        outputs[static_cast<std::size_t>(len - 1 - t)] = prev_out;
    }
    return tape.concat(outputs);
}

} // namespace

WNetwork WNetwork::init(int n_branches, int hidden, int latent_dim, std::uint64_t seed) {
    if (n_branches < 1) throw UsageError("WNetwork: need at least one branch");
    WNetwork net;
    net.latent_dim = latent_dim;
    Rng rng(mix_seed(seed, 0x57)); // parameter stream
    for (int b = 0; b < n_branches; ++b) {
        WBranch br;
        int skip = (b % 3) + 1;
        br.enc = SrnnLayer::init(hidden, 1, skip, mix_seed(seed, 0x100 + static_cast<std::uint64_t>(b) * 2), rng);
        br.dec = SrnnLayer::init(hidden, 1, skip, mix_seed(seed, 0x101 + static_cast<std::uint64_t>(b) * 2), rng);
        br.w_out = Matrix(1, hidden);
        init_uniform(br.w_out, hidden, rng);
        br.b_out.assign(1, 0.0);
        init_uniform(br.b_out, hidden, rng);
        net.branches.push_back(std::move(br));
    }
    net.fusion_w = Matrix(latent_dim, n_branches * hidden);
    init_uniform(net.fusion_w, n_branches * hidden, rng);
    net.fusion_b.assign(static_cast<std::size_t>(latent_dim), 0.0);
    init_uniform(net.fusion_b, n_branches * hidden, rng);
    return net;
}

WForward w_forward(Tape& tape, WNetwork& net, const Vec& x) {
    if (x.empty()) throw UsageError("w_forward: empty window");
    WForward out;
    int len = static_cast<int>(x.size());
    for (WBranch& br : net.branches) {
        int state = run_srnn_encoder(tape, br.enc, x);
        out.branch_state.push_back(state);
        out.recon.push_back(run_srnn_decoder(tape, br, state, len));
    }
    int cat = tape.concat(out.branch_state);
    out.z_c = tape.affine(tape.param(net.fusion_w), tape.param(net.fusion_b), cat);
    return out;
}

WExtended w_extended_latent(Tape& tape, WNetwork& net, const Vec& x) {
    WExtended ext;
    ext.fwd = w_forward(tape, net, x);
    int nb = net.n_branches();
    ext.rel_errors.resize(static_cast<std::size_t>(nb));
    ext.cos_sims.resize(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        Vec rec = tape.value_vec(ext.fwd.recon[static_cast<std::size_t>(b)]);
        ext.rel_errors[static_cast<std::size_t>(b)] = d_rel(x, rec);
        ext.cos_sims[static_cast<std::size_t>(b)] = d_cos(x, rec);
    }
    auto [i, j] = select_branches(ext.rel_errors, ext.cos_sims);
    ext.argmin_rel = i;
    ext.argmax_cos = j;
    int rel = d_rel_node(tape, x, ext.fwd.recon[static_cast<std::size_t>(i)]);
    int cos = d_cos_node(tape, x, ext.fwd.recon[static_cast<std::size_t>(j)]);
    int parts[3] = {ext.fwd.z_c, rel, cos};
    ext.z_ext = tape.concat(parts);
    return ext;
}

std::vector<int> DNetwork::dilations() const {
    std::vector<int> ds;
    for (const DilatedLayer& l : enc_layers) ds.push_back(l.dilation);
    return ds;
}

DNetwork DNetwork::init(int n_layers, int hidden, int latent_dim, std::uint64_t seed) {
    if (n_layers < 1) throw UsageError("DNetwork: need at least one layer");
    DNetwork net;
    net.latent_dim = latent_dim;
    Rng rng(mix_seed(seed, 0xd0));
    int dilation = 3;
    for (int l = 0; l < n_layers; ++l) {
        int input = l == 0 ? 1 : hidden;
        net.enc_layers.push_back(DilatedLayer::init(hidden, input, dilation, rng));
        net.dec_layers.push_back(DilatedLayer::init(hidden, input, dilation, rng));
        dilation *= 3;
    }
    net.fusion_w = Matrix(latent_dim, n_layers * hidden);
    init_uniform(net.fusion_w, n_layers * hidden, rng);
    net.fusion_b.assign(static_cast<std::size_t>(latent_dim), 0.0);
    init_uniform(net.fusion_b, n_layers * hidden, rng);
    net.w_out = Matrix(1, hidden);
    init_uniform(net.w_out, hidden, rng);
    net.b_out.assign(1, 0.0);
    init_uniform(net.b_out, hidden, rng);
    return net;
}

DForward d_forward(Tape& tape, DNetwork& net, const Vec& x) {
    if (x.empty()) throw UsageError("d_forward: empty window");
    DForward out;
    int len = static_cast<int>(x.size());
    int n_layers = net.n_layers();

    // Encoder: stacked dilated layers, zero initial states.
    std::vector<DilatedHistory> enc_hist(static_cast<std::size_t>(n_layers));
    for (int l = 0; l < n_layers; ++l)
        enc_hist[static_cast<std::size_t>(l)].start(tape, net.hidden());
    for (int t = 0; t < len; ++t) {
        int lower = tape.constant(x[static_cast<std::size_t>(t)]);
        for (int l = 0; l < n_layers; ++l)
            lower = dilated_step(tape, net.enc_layers[static_cast<std::size_t>(l)],
                                 enc_hist[static_cast<std::size_t>(l)], t, lower);
    }
    for (int l = 0; l < n_layers; ++l)
        out.layer_state.push_back(enc_hist[static_cast<std::size_t>(l)].h.back());

    int cat = tape.concat(out.layer_state);
    out.z_c = tape.affine(tape.param(net.fusion_w), tape.param(net.fusion_b), cat);

    // Decoder mirrors the dilation schedule; layer i starts from the
    // encoder's layer-i final state and reconstructs in reverse time order.
    std::vector<DilatedHistory> dec_hist(static_cast<std::size_t>(n_layers));
    for (int l = 0; l < n_layers; ++l) {
        dec_hist[static_cast<std::size_t>(l)].start(tape, net.hidden());
        dec_hist[static_cast<std::size_t>(l)].init_h = out.layer_state[static_cast<std::size_t>(l)];
    }
    int prev_out = tape.constant(0.0);
    std::vector<int> outputs(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
        int lower = prev_out;
        for (int l = 0; l < n_layers; ++l)
            lower = dilated_step(tape, net.dec_layers[static_cast<std::size_t>(l)],
                                 dec_hist[static_cast<std::size_t>(l)], t, lower);
        prev_out = tape.affine(tape.param(net.w_out), tape.param(net.b_out), lower);
        outputs[static_cast<std::size_t>(len - 1 - t)] = prev_out;
    }
    out.recon = tape.concat(outputs);
    return out;
}

DExtended d_extended_latent(Tape& tape, DNetwork& net, const Vec& x) {
    DExtended ext;
    ext.fwd = d_forward(tape, net, x);
    Vec rec = tape.value_vec(ext.fwd.recon);
    ext.rel_error = d_rel(x, rec);
    ext.cos_sim = d_cos(x, rec);
    int rel = d_rel_node(tape, x, ext.fwd.recon);
    int cos = d_cos_node(tape, x, ext.fwd.recon);
    int parts[3] = {ext.fwd.z_c, rel, cos};
    ext.z_ext = tape.concat(parts);
    return ext;
}

void collect_params(WNetwork& net, std::vector<ParamRef>& out) {
    for (WBranch& br : net.branches) {
        collect_params(br.enc, out);
        collect_params(br.dec, out);
        out.push_back(param_ref(br.w_out));
        out.push_back(param_ref(br.b_out));
    }
    out.push_back(param_ref(net.fusion_w));
    out.push_back(param_ref(net.fusion_b));
}

void collect_params(DNetwork& net, std::vector<ParamRef>& out) {
    for (DilatedLayer& l : net.enc_layers) collect_params(l, out);
    for (DilatedLayer& l : net.dec_layers) collect_params(l, out);
    out.push_back(param_ref(net.fusion_w));
    out.push_back(param_ref(net.fusion_b));
    out.push_back(param_ref(net.w_out));
    out.push_back(param_ref(net.b_out));
}

} // namespace etnet
