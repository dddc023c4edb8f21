#pragma once

#include <cstdint>
#include <limits>

#include "etnet/compression.hpp"
#include "etnet/gmm.hpp"

namespace etnet {

struct TrainConfig {
    double lambda = 0.1;        // energy weight
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    std::uint64_t seed = 1;
    int n_branches = 3;         // W network width
    int n_layers = 2;           // D network depth
    int hidden_dim = 8;
    int latent_dim = 0;         // 0 -> same as hidden_dim
    int gmm_k = 4;
    int em_iters_per_epoch = 5;
    int memnet_hidden = 8;
    bool parallel_branches = true;

    int effective_latent_dim() const { return latent_dim > 0 ? latent_dim : hidden_dim; }
    void validate() const;
};

// Window min-max statistics captured from the training set.
struct NormStats {
    double min = 0.0;
    double max = 1.0;

    Vec apply(const Vec& x) const {
        double span = max - min;
        if (span <= 0.0) span = 1.0;
        Vec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - min) / span;
        return out;
    }
};

// Two compression branches with their GMMs plus everything needed to score
// new windows: normalization statistics, anomaly threshold, and the
// construction seed.
struct EtNetModel {
    int format_version = 1;
    TrainConfig cfg;
    WNetwork w_net;
    GmmModel w_gmm;
    DNetwork d_net;
    GmmModel d_gmm;
    NormStats norm;
    double threshold = std::numeric_limits<double>::quiet_NaN();
    bool trained = false;

    static EtNetModel init(const TrainConfig& cfg);
};

void collect_params_w(EtNetModel& m, std::vector<ParamRef>& out);
void collect_params_d(EtNetModel& m, std::vector<ParamRef>& out);

} // namespace etnet
