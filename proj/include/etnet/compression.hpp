#pragma once

#include <cstdint>
#include <vector>

#include "etnet/rnn.hpp"

namespace etnet {

// Relative reconstruction distance ||x - xr|| / ||x||. A zero-norm input
// substitutes denominator 1e-12 and reports it through `degenerate`.
double d_rel(const Vec& x, const Vec& xr, bool* degenerate = nullptr);

// Cosine similarity; defined as 0 when either operand has zero norm.
double d_cos(const Vec& x, const Vec& xr);

// Branch selection for the W extended latent: i = argmin relative distance,
// j = argmax cosine similarity (ties to the lowest index).
std::pair<int, int> select_branches(const Vec& rel_errors, const Vec& cos_sims);

// One SRNN encoder/decoder pair plus the scalar output projection shared
// across decoder steps.
struct WBranch {
    SrnnLayer enc;
    SrnnLayer dec;
    Matrix w_out; // 1 x hidden
    Vec b_out;    // length 1
};

struct WNetwork {
    std::vector<WBranch> branches;
    Matrix fusion_w; // latent_dim x (n_branches * hidden)
    Vec fusion_b;
    int latent_dim = 0;

    int hidden() const { return branches.empty() ? 0 : branches[0].enc.hidden(); }
    int n_branches() const { return static_cast<int>(branches.size()); }
    // Branch i gets skip ((i) mod 3) + 1, covering spans 1..3.
    static WNetwork init(int n_branches, int hidden, int latent_dim, std::uint64_t seed);
};

struct DNetwork {
    std::vector<DilatedLayer> enc_layers;
    std::vector<DilatedLayer> dec_layers;
    Matrix fusion_w; // latent_dim x (n_layers * hidden)
    Vec fusion_b;
    Matrix w_out; // 1 x hidden
    Vec b_out;
    int latent_dim = 0;

    int hidden() const { return enc_layers.empty() ? 0 : enc_layers[0].cell.hidden(); }
    int n_layers() const { return static_cast<int>(enc_layers.size()); }
    std::vector<int> dilations() const;
    // Dilation schedule 3, 9, 27, ... (3^i for layer i starting at 1).
    static DNetwork init(int n_layers, int hidden, int latent_dim, std::uint64_t seed);
};

struct WForward {
    int z_c = -1;                 // fused latent node
    std::vector<int> recon;       // one length-L reconstruction node per branch
    std::vector<int> branch_state; // final encoder state per branch
};

struct WExtended {
    WForward fwd;
    int z_ext = -1;   // [z_c, d_rel, d_cos]
    int argmin_rel = 0;
    int argmax_cos = 0;
    Vec rel_errors;
    Vec cos_sims;
};

struct DForward {
    int z_c = -1;
    int recon = -1;
    std::vector<int> layer_state;
};

struct DExtended {
    DForward fwd;
    int z_ext = -1;
    double rel_error = 0.0;
    double cos_sim = 0.0;
};

// Encodes the (already normalized) window on the tape; every branch decodes
// its own reconstruction of length L.
WForward w_forward(Tape& tape, WNetwork& net, const Vec& x);
WExtended w_extended_latent(Tape& tape, WNetwork& net, const Vec& x);

DForward d_forward(Tape& tape, DNetwork& net, const Vec& x);
DExtended d_extended_latent(Tape& tape, DNetwork& net, const Vec& x);

void collect_params(WNetwork& net, std::vector<ParamRef>& out);
void collect_params(DNetwork& net, std::vector<ParamRef>& out);

} // namespace etnet
