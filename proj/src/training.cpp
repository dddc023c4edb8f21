#include "etnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

namespace etnet {

void adam_step(AdamState& state, const std::vector<ParamRef>& params,
               const std::vector<Vec>& grads, double lr) {
    if (params.size() != grads.size()) throw ShapeError("adam_step: params/grads count mismatch");
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(static_cast<std::size_t>(params[i].n), 0.0);
            state.v[i].assign(static_cast<std::size_t>(params[i].n), 0.0);
        }
    }
    state.step += 1;
    double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (static_cast<int>(grads[i].size()) != params[i].n)
            throw ShapeError("adam_step: gradient shape mismatch");
        double* p = params[i].p;
        Vec& m = state.m[i];
        Vec& v = state.v[i];
        for (int k = 0; k < params[i].n; ++k) {
            double g = grads[i][static_cast<std::size_t>(k)];
            if (!std::isfinite(g))
                throw NumericError("adam_step: non-finite gradient in parameter block " +
                                   std::to_string(i));
            m[static_cast<std::size_t>(k)] = state.beta1 * m[static_cast<std::size_t>(k)] + (1.0 - state.beta1) * g;
            v[static_cast<std::size_t>(k)] = state.beta2 * v[static_cast<std::size_t>(k)] + (1.0 - state.beta2) * g * g;
            double mhat = m[static_cast<std::size_t>(k)] / b1t;
            double vhat = v[static_cast<std::size_t>(k)] / b2t;
            p[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

namespace {

// Shared scaffolding for the two batch losses: accumulates the scaled
// reconstruction chain, batch memberships, and per-sample energies.
struct LossBuilder {
    Tape& tape;
    double lambda;
    int n;
    int recon_chain = -1;
    std::vector<int> gammas;
    std::vector<int> z_exts;

    void add_recon(int node) { recon_chain = recon_chain < 0 ? node : tape.add(recon_chain, node); }

    LossNodes finish(GmmModel& gmm, double recon_scale) {
        LossNodes out;
        out.recon = tape.scale(recon_chain, recon_scale);
        if (lambda <= 0.0) {
            out.total = out.recon;
            return out;
        }
        GmmFactors factors = factorize(gmm);
        int phi_chain = -1;
        for (int g : gammas) phi_chain = phi_chain < 0 ? g : tape.add(phi_chain, g);
        int phi = tape.scale(phi_chain, 1.0 / n);
        int energy_chain = -1;
        for (int z : z_exts) {
            int e = energy_node(tape, factors, z, phi);
            energy_chain = energy_chain < 0 ? e : tape.add(energy_chain, e);
        }
        out.energy = tape.scale(energy_chain, 1.0 / n);
        out.total = tape.add(out.recon, tape.scale(out.energy, lambda));
        return out;
    }
};

} // namespace

LossNodes loss_w(Tape& tape, WNetwork& net, GmmModel& gmm, const std::vector<Vec>& batch,
                 double lambda) {
    if (batch.empty()) throw UsageError("loss_w: empty batch");
    LossBuilder lb{tape, lambda, static_cast<int>(batch.size())};
    for (const Vec& x : batch) {
        WExtended ext = w_extended_latent(tape, net, x);
        int xc = tape.constant(x);
        for (int rec : ext.fwd.recon) lb.add_recon(tape.sum_sq(tape.sub(xc, rec)));
        if (lambda > 0.0) {
            lb.gammas.push_back(membership_node(tape, gmm.memnet, ext.z_ext));
            lb.z_exts.push_back(ext.z_ext);
        }
    }
    return lb.finish(gmm, 1.0 / (static_cast<double>(batch.size()) * net.n_branches()));
}

LossNodes loss_d(Tape& tape, DNetwork& net, GmmModel& gmm, const std::vector<Vec>& batch,
                 double lambda) {
    if (batch.empty()) throw UsageError("loss_d: empty batch");
    LossBuilder lb{tape, lambda, static_cast<int>(batch.size())};
    for (const Vec& x : batch) {
        DExtended ext = d_extended_latent(tape, net, x);
        int xc = tape.constant(x);
        lb.add_recon(tape.sum_sq(tape.sub(xc, ext.fwd.recon)));
        if (lambda > 0.0) {
            lb.gammas.push_back(membership_node(tape, gmm.memnet, ext.z_ext));
            lb.z_exts.push_back(ext.z_ext);
        }
    }
    return lb.finish(gmm, 1.0 / static_cast<double>(batch.size()));
}

namespace {

struct EpochStats {
    double recon = 0.0;
    double energy = 0.0;
};

// One branch's full training loop. `forward_latent` runs one window through
// the branch and returns its extended latent; `make_loss` builds the batch
// loss on the tape.
template <typename ForwardLatent, typename MakeLoss>
std::vector<LossReport> train_branch(char branch, GmmModel& gmm,
                                     const std::vector<ParamRef>& params,
                                     const std::vector<Vec>& windows, const TrainConfig& cfg,
                                     std::uint64_t stream, ForwardLatent forward_latent,
                                     MakeLoss make_loss) {
    Rng shuffle_rng(mix_seed(cfg.seed, stream));
    Rng gmm_rng(mix_seed(cfg.seed, stream + 1));
    int n = static_cast<int>(windows.size());

    Tape tape;
    auto collect_latents = [&](std::vector<Vec>& latents, std::vector<Vec>& gammas) {
        latents.clear();
        gammas.clear();
        for (const Vec& x : windows) {
            tape.reset();
            Vec z = forward_latent(tape, x);
            gammas.push_back(membership(gmm.memnet, z));
            latents.push_back(std::move(z));
        }
    };

    auto refresh_gmm = [&](bool first) {
        std::vector<Vec> latents, gammas;
        collect_latents(latents, gammas);
        gmm.phi = mixture_weights(gammas);
        if (first) init_gmm_params(gmm, latents, gmm_rng);
        for (int it = 0; it < cfg.em_iters_per_epoch; ++it) em_update(gmm, latents);
    };

    refresh_gmm(true);

    AdamState adam;
    std::vector<Vec> grads(params.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    std::vector<LossReport> reports;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        EpochStats stats;
        for (int start = 0; start < n; start += cfg.batch_size) {
            int stop = std::min(n, start + cfg.batch_size);
            std::vector<Vec> batch;
            batch.reserve(static_cast<std::size_t>(stop - start));
            for (int i = start; i < stop; ++i)
                batch.push_back(windows[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);

            tape.reset();
            LossNodes ln = make_loss(tape, batch);
            double total = tape.scalar(ln.total);
            if (!std::isfinite(total) || total > 1e6)
                throw NumericError("training diverged: branch " + std::string(1, branch) +
                                   ", epoch " + std::to_string(epoch) + ", loss " +
                                   std::to_string(total));
            tape.backward(ln.total);
            for (std::size_t pi = 0; pi < params.size(); ++pi) {
                const double* g = tape.param_grad(params[pi].p);
                grads[pi].assign(static_cast<std::size_t>(params[pi].n), 0.0);
                if (g) std::copy(g, g + params[pi].n, grads[pi].begin());
            }
            adam_step(adam, params, grads, cfg.learning_rate);

            double nb = static_cast<double>(stop - start);
            stats.recon += tape.scalar(ln.recon) * nb;
            if (ln.energy >= 0) stats.energy += tape.scalar(ln.energy) * nb;
        }
        refresh_gmm(false);

        LossReport rep;
        rep.epoch = epoch;
        rep.branch = branch;
        rep.recon_loss = stats.recon / n;
        rep.energy_loss = stats.energy / n;
        rep.total = rep.recon_loss + cfg.lambda * rep.energy_loss;
        reports.push_back(rep);
    }
    return reports;
}

} // namespace

std::vector<LossReport> train(EtNetModel& model, const std::vector<Vec>& windows,
                              const TrainConfig& cfg) {
    cfg.validate();
    if (windows.empty()) throw UsageError("train: empty dataset");
    for (const Vec& w : windows)
        if (w.size() != windows[0].size())
            throw UsageError("train: windows must share one length");

    double lo = windows[0][0], hi = windows[0][0];
    for (const Vec& w : windows)
        for (double v : w) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    model.norm.min = lo;
    model.norm.max = hi;

    std::vector<Vec> normed;
    normed.reserve(windows.size());
    for (const Vec& w : windows) normed.push_back(model.norm.apply(w));

    std::vector<ParamRef> w_params, d_params;
    collect_params_w(model, w_params);
    collect_params_d(model, d_params);

    auto w_latent = [&model](Tape& t, const Vec& x) {
        return t.value_vec(w_extended_latent(t, model.w_net, x).z_ext);
    };
    auto d_latent = [&model](Tape& t, const Vec& x) {
        return t.value_vec(d_extended_latent(t, model.d_net, x).z_ext);
    };
    auto w_loss = [&model, &cfg](Tape& t, const std::vector<Vec>& batch) {
        return loss_w(t, model.w_net, model.w_gmm, batch, cfg.lambda);
    };
    auto d_loss = [&model, &cfg](Tape& t, const std::vector<Vec>& batch) {
        return loss_d(t, model.d_net, model.d_gmm, batch, cfg.lambda);
    };

    std::vector<LossReport> w_reports, d_reports;
    if (cfg.parallel_branches) {
        std::exception_ptr w_err, d_err;
        std::thread wt([&] {
            try {
                w_reports = train_branch('W', model.w_gmm, w_params, normed, cfg, 0xA0, w_latent, w_loss);
            } catch (...) {
                w_err = std::current_exception();
            }
        });
        std::thread dt([&] {
            try {
                d_reports = train_branch('D', model.d_gmm, d_params, normed, cfg, 0xB0, d_latent, d_loss);
            } catch (...) {
                d_err = std::current_exception();
            }
        });
        wt.join();
        dt.join();
        if (w_err) std::rethrow_exception(w_err);
        if (d_err) std::rethrow_exception(d_err);
    } else {
        w_reports = train_branch('W', model.w_gmm, w_params, normed, cfg, 0xA0, w_latent, w_loss);
        d_reports = train_branch('D', model.d_gmm, d_params, normed, cfg, 0xB0, d_latent, d_loss);
    }

    model.trained = true;

    // Anomaly threshold: 95th percentile (nearest rank) of training scores.
    {
        GmmFactors wf = factorize(model.w_gmm);
        GmmFactors df = factorize(model.d_gmm);
        Tape tape;
        Vec scores;
        scores.reserve(normed.size());
        for (const Vec& x : normed) {
            tape.reset();
            Vec zw = w_latent(tape, x);
            tape.reset();
            Vec zd = d_latent(tape, x);
            scores.push_back(std::max(energy(wf, model.w_gmm.phi, zw),
                                      energy(df, model.d_gmm.phi, zd)));
        }
        std::sort(scores.begin(), scores.end());
        std::size_t rank = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(scores.size())));
        if (rank > 0) --rank;
        model.threshold = scores[std::min(rank, scores.size() - 1)];
    }

    std::vector<LossReport> merged;
    for (std::size_t i = 0; i < std::max(w_reports.size(), d_reports.size()); ++i) {
        if (i < w_reports.size()) merged.push_back(w_reports[i]);
        if (i < d_reports.size()) merged.push_back(d_reports[i]);
    }
    return merged;
}

void write_loss_csv(const std::string& path, const std::vector<LossReport>& reports) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# format=etnet-losses.v1\n";
    out << "epoch,branch,recon_loss,energy_loss,total\n";
    out.precision(17);
    for (const LossReport& r : reports)
        out << r.epoch << ',' << r.branch << ',' << r.recon_loss << ',' << r.energy_loss << ','
            << r.total << '\n';
}

} // namespace etnet
