#pragma once

#include "etnet/model.hpp"

namespace etnet {

struct BranchEnergies {
    double e_w = 0.0;
    double e_d = 0.0;
    double score() const { return e_w > e_d ? e_w : e_d; }
};

struct LatentPair {
    Vec z_w;
    Vec z_d;
};

// Extended latents of one raw window under both branches.
LatentPair latents(const EtNetModel& model, const Vec& window);

BranchEnergies branch_energies(const EtNetModel& model, const Vec& window);

// y = max(E_W, E_D) on the normalized window.
double anomaly_score(const EtNetModel& model, const Vec& window);

// Per-branch mixture memberships: the GMM posterior responsibilities of the
// window's extended latent under that branch's fitted mixture.
Vec branch_membership(const GmmModel& gmm, const Vec& z);

// Combination rule: the branch with the sharper membership wins; W labels
// occupy [0, K), D labels [K, 2K).
int combine_cluster_label(const Vec& gamma_w, const Vec& gamma_d);

int cluster_label(const EtNetModel& model, const Vec& window);

struct AttributionResult {
    int anomaly_id = -1;
    char branch = 'W';
    Vec alphas;
    std::vector<int> reference_ids;       // deduplicated, ordered from anomaly to center
    std::vector<Vec> reference_latents;
    Vec z_anomaly;
    Vec z_center;
};

// Walks the latent reference line from the anomaly's embedding to the center
// of the dominant normal component and returns the nearest training window at
// each interpolation point. Latents must come from `latents()` on the same
// model; ids are indices into `training_latents`.
AttributionResult attribute(const EtNetModel& model, const Vec& x_anomaly,
                            const std::vector<LatentPair>& training_latents, int n_points);

} // namespace etnet
