#include "etnet/tasks.hpp"

#include <algorithm>
#include <cmath>

namespace etnet {

namespace {

void require_trained(const EtNetModel& model, const char* op) {
    if (!model.trained) throw UsageError(std::string(op) + ": model is not trained");
}

} // namespace

LatentPair latents(const EtNetModel& model, const Vec& window) {
    Vec x = model.norm.apply(window);
    // const_cast: forward passes bind parameters on the tape but never write
    // them; the model stays frozen.
    EtNetModel& m = const_cast<EtNetModel&>(model);
    Tape tape;
    LatentPair lp;
    lp.z_w = tape.value_vec(w_extended_latent(tape, m.w_net, x).z_ext);
    tape.reset();
    lp.z_d = tape.value_vec(d_extended_latent(tape, m.d_net, x).z_ext);
    return lp;
}

BranchEnergies branch_energies(const EtNetModel& model, const Vec& window) {
    require_trained(model, "branch_energies");
    LatentPair lp = latents(model, window);
    BranchEnergies be;
    be.e_w = energy(model.w_gmm, lp.z_w);
    be.e_d = energy(model.d_gmm, lp.z_d);
    return be;
}

double anomaly_score(const EtNetModel& model, const Vec& window) {
    return branch_energies(model, window).score();
}

Vec branch_membership(const GmmModel& gmm, const Vec& z) {
    GmmFactors f = factorize(gmm);
    Vec logp(static_cast<std::size_t>(gmm.k));
    for (int j = 0; j < gmm.k; ++j) {
        Vec diff(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            diff[i] = z[i] - f.mu[static_cast<std::size_t>(j)][i];
        Vec y = matvec(f.whiten[static_cast<std::size_t>(j)], diff);
        double p = std::max(gmm.phi[static_cast<std::size_t>(j)], 1e-300);
        logp[static_cast<std::size_t>(j)] =
            std::log(p) + f.log_norm[static_cast<std::size_t>(j)] - 0.5 * dot(y, y);
    }
    return softmax(logp);
}

int combine_cluster_label(const Vec& gamma_w, const Vec& gamma_d) {
    if (gamma_w.empty() || gamma_w.size() != gamma_d.size())
        throw UsageError("combine_cluster_label: gamma lengths must match");
    int k = static_cast<int>(gamma_w.size());
    auto argmax = [](const Vec& v) {
        return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    };
    int aw = argmax(gamma_w);
    int ad = argmax(gamma_d);
    return gamma_w[static_cast<std::size_t>(aw)] >= gamma_d[static_cast<std::size_t>(ad)]
               ? aw
               : k + ad;
}

int cluster_label(const EtNetModel& model, const Vec& window) {
    require_trained(model, "cluster_label");
    LatentPair lp = latents(model, window);
    return combine_cluster_label(branch_membership(model.w_gmm, lp.z_w),
                                 branch_membership(model.d_gmm, lp.z_d));
}

AttributionResult attribute(const EtNetModel& model, const Vec& x_anomaly,
                            const std::vector<LatentPair>& training_latents, int n_points) {
    require_trained(model, "attribute");
    if (training_latents.empty()) throw UsageError("attribute: empty training latents");
    if (n_points < 2) throw UsageError("attribute: need at least 2 points on the line");

    BranchEnergies be = branch_energies(model, x_anomaly);
    bool use_w = be.e_w >= be.e_d;
    const GmmModel& gmm = use_w ? model.w_gmm : model.d_gmm;

    AttributionResult res;
    res.branch = use_w ? 'W' : 'D';
    LatentPair lp = latents(model, x_anomaly);
    res.z_anomaly = use_w ? lp.z_w : lp.z_d;

    // Center of the normal cluster: mean of the component with the largest
    // mixture weight in the branch that produced the max energy.
    int dominant = static_cast<int>(std::max_element(gmm.phi.begin(), gmm.phi.end()) -
                                    gmm.phi.begin());
    res.z_center = gmm.mu[static_cast<std::size_t>(dominant)];

    auto branch_latent = [&](const LatentPair& p) -> const Vec& {
        return use_w ? p.z_w : p.z_d;
    };

    for (int s = 0; s < n_points; ++s) {
        double alpha = static_cast<double>(s) / (n_points - 1);
        res.alphas.push_back(alpha);
        Vec point(res.z_anomaly.size());
        for (std::size_t i = 0; i < point.size(); ++i)
            point[i] = (1.0 - alpha) * res.z_anomaly[i] + alpha * res.z_center[i];

        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < training_latents.size(); ++t) {
            double d = sum_sq_diff(branch_latent(training_latents[t]), point);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(t);
            }
        }
        // dedupe, keeping first occurrence along the line
        if (std::find(res.reference_ids.begin(), res.reference_ids.end(), best) ==
            res.reference_ids.end()) {
            res.reference_ids.push_back(best);
            res.reference_latents.push_back(
                branch_latent(training_latents[static_cast<std::size_t>(best)]));
        }
    }
    return res;
}

} // namespace etnet
