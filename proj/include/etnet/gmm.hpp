#pragma once

#include <vector>

#include "etnet/tape.hpp"

namespace etnet {

// Softmax membership estimator: one tanh hidden layer, then linear to K.
struct MembershipNet {
    Matrix w1;
    Vec b1;
    Matrix w2;
    Vec b2;

    int in_dim() const { return w1.cols; }
    int k() const { return w2.rows; }
    static MembershipNet init(int in_dim, int k, int hidden, Rng& rng);
};

Vec membership(const MembershipNet& net, const Vec& z);
int membership_node(Tape& tape, MembershipNet& net, int z);

// phi_k = mean over the batch of gamma_ik.
Vec mixture_weights(const std::vector<Vec>& gammas);

struct GmmModel {
    int k = 0;
    Vec phi;
    std::vector<Vec> mu;
    std::vector<Matrix> sigma;
    double reg_epsilon = 1e-6;
    MembershipNet memnet;

    int dim() const { return k > 0 ? static_cast<int>(mu[0].size()) : 0; }
    bool initialized() const { return k > 0 && !mu.empty(); }
};

// Frozen per-component factorization of (sigma_k + eps I); the energy on the
// tape treats mu/sigma as constants between EM refreshes.
struct GmmFactors {
    std::vector<Vec> mu;
    std::vector<Matrix> whiten;   // inverse Cholesky factor of regularized sigma
    Vec log_norm;                 // -0.5 * (d log 2pi + log det sigma_reg)
    int dim = 0;
};

GmmFactors factorize(const GmmModel& model);

// Sample energy -log sum_k phi_k N(z; mu_k, sigma_k), evaluated in log space.
double energy(const GmmModel& model, const Vec& z);
double energy(const GmmFactors& f, const Vec& phi, const Vec& z);

// Tape version with phi as a live node (length K); gradients flow into z and
// into whatever produced phi.
int energy_node(Tape& tape, const GmmFactors& f, int z, int phi);

// One EM iteration over the batch: E-step responsibilities from the current
// (phi, mu, sigma), M-step refresh of mu and sigma only. phi is governed by
// the membership estimator and is not touched here.
void em_update(GmmModel& model, const std::vector<Vec>& z_batch);

// Mean per-sample log-likelihood under the current parameters.
double log_likelihood(const GmmModel& model, const std::vector<Vec>& z_batch);

// Seeds mu from K distinct random latents and every sigma from the global
// covariance; phi must be set by the caller (from mixture_weights).
void init_gmm_params(GmmModel& model, const std::vector<Vec>& latents, Rng& rng);

void collect_params(MembershipNet& net, std::vector<ParamRef>& out);

} // namespace etnet
