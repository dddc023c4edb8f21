#include "etnet/model.hpp"

namespace etnet {

void TrainConfig::validate() const {
    if (lambda < 0.0) throw UsageError("config: lambda must be >= 0");
    if (learning_rate <= 0.0) throw UsageError("config: learning_rate must be positive");
    if (epochs < 0) throw UsageError("config: epochs must be >= 0");
    if (batch_size < 1) throw UsageError("config: batch_size must be >= 1");
    if (n_branches < 1) throw UsageError("config: n_branches must be >= 1");
    if (n_layers < 1) throw UsageError("config: n_layers must be >= 1");
    if (hidden_dim < 1) throw UsageError("config: hidden_dim must be >= 1");
    if (gmm_k < 1) throw UsageError("config: gmm_k must be >= 1");
    if (em_iters_per_epoch < 0) throw UsageError("config: em_iters_per_epoch must be >= 0");
    if (memnet_hidden < 1) throw UsageError("config: memnet_hidden must be >= 1");
}

EtNetModel EtNetModel::init(const TrainConfig& cfg) {
    cfg.validate();
    EtNetModel m;
    m.cfg = cfg;
    int latent = cfg.effective_latent_dim();
    m.w_net = WNetwork::init(cfg.n_branches, cfg.hidden_dim, latent, mix_seed(cfg.seed, 0x11));
    m.d_net = DNetwork::init(cfg.n_layers, cfg.hidden_dim, latent, mix_seed(cfg.seed, 0x22));

    int ext_dim = latent + 2;
    Rng w_rng(mix_seed(cfg.seed, 0x33));
    Rng d_rng(mix_seed(cfg.seed, 0x44));
    m.w_gmm.k = cfg.gmm_k;
    m.w_gmm.phi.assign(static_cast<std::size_t>(cfg.gmm_k), 1.0 / cfg.gmm_k);
    m.w_gmm.memnet = MembershipNet::init(ext_dim, cfg.gmm_k, cfg.memnet_hidden, w_rng);
    m.d_gmm.k = cfg.gmm_k;
    m.d_gmm.phi.assign(static_cast<std::size_t>(cfg.gmm_k), 1.0 / cfg.gmm_k);
    m.d_gmm.memnet = MembershipNet::init(ext_dim, cfg.gmm_k, cfg.memnet_hidden, d_rng);
    return m;
}

void collect_params_w(EtNetModel& m, std::vector<ParamRef>& out) {
    collect_params(m.w_net, out);
    collect_params(m.w_gmm.memnet, out);
}

void collect_params_d(EtNetModel& m, std::vector<ParamRef>& out) {
    collect_params(m.d_net, out);
    collect_params(m.d_gmm.memnet, out);
}

} // namespace etnet
