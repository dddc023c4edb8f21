#include "etnet/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace etnet {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Matrix regularized(const Matrix& sigma, double eps) {
    Matrix s = sigma;
    for (int i = 0; i < s.rows; ++i) s(i, i) += eps;
    return s;
}
} // namespace

MembershipNet MembershipNet::init(int in_dim, int k, int hidden, Rng& rng) {
    MembershipNet net;
    net.w1 = Matrix(hidden, in_dim);
    init_uniform(net.w1, in_dim, rng);
    net.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    init_uniform(net.b1, in_dim, rng);
    net.w2 = Matrix(k, hidden);
    init_uniform(net.w2, hidden, rng);
    net.b2.assign(static_cast<std::size_t>(k), 0.0);
    init_uniform(net.b2, hidden, rng);
    return net;
}

Vec membership(const MembershipNet& net, const Vec& z) {
    Vec h = matvec(net.w1, z);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i] + net.b1[i]);
    Vec logits = matvec(net.w2, h);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += net.b2[i];
    return softmax(logits);
}

int membership_node(Tape& tape, MembershipNet& net, int z) {
    int h = tape.tanh(tape.affine(tape.param(net.w1), tape.param(net.b1), z));
    int logits = tape.affine(tape.param(net.w2), tape.param(net.b2), h);
    return tape.softmax(logits);
}

Vec mixture_weights(const std::vector<Vec>& gammas) {
    if (gammas.empty()) throw UsageError("mixture_weights: empty batch");
    Vec phi(gammas[0].size(), 0.0);
    for (const Vec& g : gammas) {
        if (g.size() != phi.size()) throw ShapeError("mixture_weights: gamma length mismatch");
        for (std::size_t k = 0; k < phi.size(); ++k) phi[k] += g[k];
    }
    for (double& p : phi) p /= static_cast<double>(gammas.size());
    return phi;
}

GmmFactors factorize(const GmmModel& model) {
    if (!model.initialized()) throw UsageError("factorize: GMM parameters not initialized");
    GmmFactors f;
    f.dim = model.dim();
    f.mu = model.mu;
    f.log_norm.resize(static_cast<std::size_t>(model.k));
    f.whiten.resize(static_cast<std::size_t>(model.k));
    for (int k = 0; k < model.k; ++k) {
        Matrix lower;
        if (!cholesky(regularized(model.sigma[static_cast<std::size_t>(k)], model.reg_epsilon),
                      lower))
            throw NumericError("GMM covariance for component " + std::to_string(k) +
                               " is singular despite regularization");
        double logdet = 0.0;
        for (int i = 0; i < lower.rows; ++i) logdet += std::log(lower(i, i));
        logdet *= 2.0;
        f.log_norm[static_cast<std::size_t>(k)] = -0.5 * (f.dim * kLog2Pi + logdet);
        f.whiten[static_cast<std::size_t>(k)] = invert_lower(lower);
    }
    return f;
}

double energy(const GmmFactors& f, const Vec& phi, const Vec& z) {
    int k = static_cast<int>(f.mu.size());
    Vec terms(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        Vec diff(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) diff[i] = z[i] - f.mu[static_cast<std::size_t>(j)][i];
        Vec y = matvec(f.whiten[static_cast<std::size_t>(j)], diff);
        double quad = dot(y, y);
        double p = std::max(phi[static_cast<std::size_t>(j)], 1e-300);
        terms[static_cast<std::size_t>(j)] =
            std::log(p) + f.log_norm[static_cast<std::size_t>(j)] - 0.5 * quad;
    }
    double m = *std::max_element(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - m);
    return -(m + std::log(sum));
}

double energy(const GmmModel& model, const Vec& z) {
    if (static_cast<int>(z.size()) != model.dim())
        throw ShapeError("energy: latent dim mismatch");
    return energy(factorize(model), model.phi, z);
}

int energy_node(Tape& tape, const GmmFactors& f, int z, int phi) {
    int k = static_cast<int>(f.mu.size());
    if (tape.size(phi) != k) throw ShapeError("energy_node: phi length mismatch");
    if (tape.size(z) != f.dim) throw ShapeError("energy_node: latent dim mismatch");

    std::vector<int> terms(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        int mu_c = tape.constant(f.mu[static_cast<std::size_t>(j)]);
        int diff = tape.sub(z, mu_c);
        int wid = tape.constant_matrix(f.whiten[static_cast<std::size_t>(j)]);
        int quad = tape.sum_sq(tape.matvec(wid, diff));
        int log_density = tape.add_const(tape.scale(quad, -0.5), f.log_norm[static_cast<std::size_t>(j)]);
        int phi_j = tape.slice(phi, j, 1);
        int log_phi = tape.log(tape.add_const(phi_j, 1e-300));
        terms[static_cast<std::size_t>(j)] = tape.add(log_phi, log_density);
    }
    // log-sum-exp with the running max as a constant shift
    double m = tape.scalar(terms[0]);
    for (int j = 1; j < k; ++j) m = std::max(m, tape.scalar(terms[static_cast<std::size_t>(j)]));
    int acc = -1;
    for (int j = 0; j < k; ++j) {
        int e = tape.exp(tape.add_const(terms[static_cast<std::size_t>(j)], -m));
        acc = acc < 0 ? e : tape.add(acc, e);
    }
    return tape.scale(tape.add_const(tape.log(acc), m), -1.0);
}

void em_update(GmmModel& model, const std::vector<Vec>& z_batch) {
    if (!model.initialized()) throw UsageError("em_update: GMM parameters not initialized");
    int k = model.k;
    int d = model.dim();
    int m = static_cast<int>(z_batch.size());
    if (m < k) throw UsageError("em_update: batch size must be >= K");

    GmmFactors f = factorize(model);

    // E-step: responsibilities in log space under the current parameters.
    std::vector<Vec> resp(static_cast<std::size_t>(m), Vec(static_cast<std::size_t>(k)));
    for (int i = 0; i < m; ++i) {
        const Vec& z = z_batch[static_cast<std::size_t>(i)];
        if (static_cast<int>(z.size()) != d) throw ShapeError("em_update: latent dim mismatch");
        Vec logp(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) {
            Vec diff(z.size());
            for (std::size_t t = 0; t < z.size(); ++t)
                diff[t] = z[t] - f.mu[static_cast<std::size_t>(j)][t];
            Vec y = matvec(f.whiten[static_cast<std::size_t>(j)], diff);
            double p = std::max(model.phi[static_cast<std::size_t>(j)], 1e-300);
            logp[static_cast<std::size_t>(j)] =
                std::log(p) + f.log_norm[static_cast<std::size_t>(j)] - 0.5 * dot(y, y);
        }
        resp[static_cast<std::size_t>(i)] = softmax(logp);
    }

    // M-step: refresh mu and sigma.
    for (int j = 0; j < k; ++j) {
        double total = 0.0;
        for (int i = 0; i < m; ++i) total += resp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (total <= 0.0)
            throw NumericError("em_update: component " + std::to_string(j) + " collapsed");

        Vec mu(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < m; ++i) {
            double r = resp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const Vec& z = z_batch[static_cast<std::size_t>(i)];
            for (int t = 0; t < d; ++t) mu[static_cast<std::size_t>(t)] += r * z[static_cast<std::size_t>(t)];
        }
        for (double& x : mu) x /= total;

        Matrix sigma(d, d);
        for (int i = 0; i < m; ++i) {
            double r = resp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const Vec& z = z_batch[static_cast<std::size_t>(i)];
            for (int a = 0; a < d; ++a) {
                double da = z[static_cast<std::size_t>(a)] - mu[static_cast<std::size_t>(a)];
                for (int b = a; b < d; ++b) {
                    double db = z[static_cast<std::size_t>(b)] - mu[static_cast<std::size_t>(b)];
                    sigma(a, b) += r * da * db;
                }
            }
        }
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) {
                double v = sigma(a, b) / total;
                sigma(a, b) = v;
                sigma(b, a) = v;
            }
        for (int a = 0; a < d; ++a) sigma(a, a) += model.reg_epsilon;

        model.mu[static_cast<std::size_t>(j)] = std::move(mu);
        model.sigma[static_cast<std::size_t>(j)] = std::move(sigma);
    }
}

double log_likelihood(const GmmModel& model, const std::vector<Vec>& z_batch) {
    if (z_batch.empty()) throw UsageError("log_likelihood: empty batch");
    double acc = 0.0;
    GmmFactors f = factorize(model);
    for (const Vec& z : z_batch) acc -= energy(f, model.phi, z);
    return acc / static_cast<double>(z_batch.size());
}

void init_gmm_params(GmmModel& model, const std::vector<Vec>& latents, Rng& rng) {
    if (model.k < 1) throw UsageError("init_gmm_params: K must be >= 1");
    if (static_cast<int>(latents.size()) < model.k)
        throw UsageError("init_gmm_params: need at least K latents");
    int d = static_cast<int>(latents[0].size());
    int m = static_cast<int>(latents.size());

    Vec mean(static_cast<std::size_t>(d), 0.0);
    for (const Vec& z : latents)
        for (int t = 0; t < d; ++t) mean[static_cast<std::size_t>(t)] += z[static_cast<std::size_t>(t)];
    for (double& x : mean) x /= static_cast<double>(m);

    Matrix cov(d, d);
    for (const Vec& z : latents)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                cov(a, b) += (z[static_cast<std::size_t>(a)] - mean[static_cast<std::size_t>(a)]) *
                             (z[static_cast<std::size_t>(b)] - mean[static_cast<std::size_t>(b)]);
    for (double& x : cov.data) x /= static_cast<double>(m);
    for (int a = 0; a < d; ++a) cov(a, a) += model.reg_epsilon;

    // K distinct random latents as initial means.
    std::vector<std::size_t> picked;
    while (static_cast<int>(picked.size()) < model.k) {
        std::size_t idx = static_cast<std::size_t>(rng.index(static_cast<std::uint64_t>(m)));
        if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
    }
    model.mu.clear();
    model.sigma.clear();
    for (std::size_t idx : picked) {
        model.mu.push_back(latents[idx]);
        model.sigma.push_back(cov);
    }
}

void collect_params(MembershipNet& net, std::vector<ParamRef>& out) {
    out.push_back(param_ref(net.w1));
    out.push_back(param_ref(net.b1));
    out.push_back(param_ref(net.w2));
    out.push_back(param_ref(net.b2));
}

} // namespace etnet
