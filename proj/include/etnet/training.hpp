#pragma once

#include <string>
#include <vector>

#include "etnet/model.hpp"

namespace etnet {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Vec> m;
    std::vector<Vec> v;
};

// Bias-corrected Adam update in place. Gradients are aligned with `params`;
// a non-finite gradient aborts with a diagnostic.
void adam_step(AdamState& state, const std::vector<ParamRef>& params,
               const std::vector<Vec>& grads, double lr);

struct LossNodes {
    int total = -1;
    int recon = -1;  // already scaled by 1/N (and 1/N_E for the W loss)
    int energy = -1; // mean sample energy, unweighted by lambda; -1 when lambda == 0
};

// Batch losses on the tape. The energy term uses the frozen (mu, sigma) of
// the GMM while phi is recomputed from the batch memberships, so gradients
// reach both the encoders and the membership net.
LossNodes loss_w(Tape& tape, WNetwork& net, GmmModel& gmm, const std::vector<Vec>& batch,
                 double lambda);
LossNodes loss_d(Tape& tape, DNetwork& net, GmmModel& gmm, const std::vector<Vec>& batch,
                 double lambda);

struct LossReport {
    int epoch = 0;
    char branch = 'W';
    double recon_loss = 0.0;
    double energy_loss = 0.0;
    double total = 0.0;
};

// Full two-branch training: per-epoch minibatch Adam on each branch's loss,
// followed by a membership-weight refresh and EM iterations on that branch's
// GMM. Deterministic under cfg.seed. Windows are raw (unnormalized).
std::vector<LossReport> train(EtNetModel& model, const std::vector<Vec>& windows,
                              const TrainConfig& cfg);

void write_loss_csv(const std::string& path, const std::vector<LossReport>& reports);

} // namespace etnet
