#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "etnet/gmm.hpp"

using namespace etnet;

namespace {

// Naive direct-sum density evaluation: explicit inverse via Gauss-Jordan and
// the textbook formula, no log-space tricks. Independent of the production
// path, which factorizes through Cholesky.
double naive_energy(const GmmModel& m, const Vec& z) {
    int d = m.dim();
    double total = 0.0;
    for (int k = 0; k < m.k; ++k) {
        Matrix a = m.sigma[static_cast<std::size_t>(k)];
        for (int i = 0; i < d; ++i) a(i, i) += m.reg_epsilon;

        // Gauss-Jordan inverse and determinant
        Matrix inv = Matrix::identity(d);
        double det = 1.0;
        for (int col = 0; col < d; ++col) {
            int pivot = col;
            for (int r = col + 1; r < d; ++r)
                if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
            if (pivot != col) {
                for (int c = 0; c < d; ++c) {
                    std::swap(a.data[static_cast<std::size_t>(pivot) * d + c],
                              a.data[static_cast<std::size_t>(col) * d + c]);
                    std::swap(inv.data[static_cast<std::size_t>(pivot) * d + c],
                              inv.data[static_cast<std::size_t>(col) * d + c]);
                }
                det = -det;
            }
            double p = a(col, col);
            det *= p;
            for (int c = 0; c < d; ++c) {
                a(col, c) /= p;
                inv(col, c) /= p;
            }
            for (int r = 0; r < d; ++r) {
                if (r == col) continue;
                double f = a(r, col);
                for (int c = 0; c < d; ++c) {
                    a(r, c) -= f * a(col, c);
                    inv(r, c) -= f * inv(col, c);
                }
            }
        }

        Vec diff(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            diff[static_cast<std::size_t>(i)] =
                z[static_cast<std::size_t>(i)] - m.mu[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        double quad = dot(diff, matvec(inv, diff));
        double density = std::exp(-0.5 * quad) /
                         std::sqrt(std::pow(2.0 * 3.14159265358979323846, d) * det);
        total += m.phi[static_cast<std::size_t>(k)] * density;
    }
    return -std::log(total);
}

// Textbook EM (all in linear space) used as the oracle for em_update, with
// phi held fixed exactly like the production rule.
void naive_em_step(GmmModel& m, const std::vector<Vec>& zs) {
    int d = m.dim();
    int n = static_cast<int>(zs.size());
    std::vector<Vec> resp(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(m.k)));
    for (int i = 0; i < n; ++i) {
        double denom = 0.0;
        Vec num(static_cast<std::size_t>(m.k));
        for (int k = 0; k < m.k; ++k) {
            GmmModel single;
            single.k = 1;
            single.phi = {1.0};
            single.mu = {m.mu[static_cast<std::size_t>(k)]};
            single.sigma = {m.sigma[static_cast<std::size_t>(k)]};
            single.reg_epsilon = m.reg_epsilon;
            double dens = std::exp(-naive_energy(single, zs[static_cast<std::size_t>(i)]));
            num[static_cast<std::size_t>(k)] = m.phi[static_cast<std::size_t>(k)] * dens;
            denom += num[static_cast<std::size_t>(k)];
        }
        for (int k = 0; k < m.k; ++k)
            resp[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                num[static_cast<std::size_t>(k)] / denom;
    }
    for (int k = 0; k < m.k; ++k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += resp[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        Vec mu(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < d; ++t)
                mu[static_cast<std::size_t>(t)] += resp[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                                                   zs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
        for (double& x : mu) x /= total;
        Matrix sig(d, d);
        for (int i = 0; i < n; ++i) {
            double r = resp[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    sig(a, b) += r *
                                 (zs[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] - mu[static_cast<std::size_t>(a)]) *
                                 (zs[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] - mu[static_cast<std::size_t>(b)]);
        }
        for (double& x : sig.data) x /= total;
        for (int a = 0; a < d; ++a) sig(a, a) += m.reg_epsilon;
        m.mu[static_cast<std::size_t>(k)] = mu;
        m.sigma[static_cast<std::size_t>(k)] = sig;
    }
}

GmmModel random_model(int k, int d, Rng& rng) {
    GmmModel m;
    m.k = k;
    Vec raw(static_cast<std::size_t>(k));
    for (double& x : raw) x = rng.uniform(0.2, 1.0);
    double s = 0.0;
    for (double x : raw) s += x;
    for (double& x : raw) x /= s;
    m.phi = raw;
    for (int j = 0; j < k; ++j) {
        Vec mu(static_cast<std::size_t>(d));
        for (double& x : mu) x = rng.uniform(-2.0, 2.0);
        m.mu.push_back(mu);
        // random SPD: A A^T + I
        Matrix a(d, d);
        for (double& x : a.data) x = rng.uniform(-0.7, 0.7);
        Matrix spd(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                double acc = r == c ? 0.5 : 0.0;
                for (int t = 0; t < d; ++t) acc += a(r, t) * a(c, t);
                spd(r, c) = acc;
            }
        m.sigma.push_back(spd);
    }
    return m;
}

std::vector<Vec> sample_blob(const Vec& center, double spread, int n, Rng& rng) {
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) {
        Vec z(center.size());
        for (std::size_t t = 0; t < z.size(); ++t) z[t] = center[t] + rng.normal(0.0, spread);
        out.push_back(std::move(z));
    }
    return out;
}

} // namespace

TEST_CASE("membership basics") {
    Rng rng(1);
    SUBCASE("zero-initialized net gives uniform gamma") {
        MembershipNet net;
        net.w1 = Matrix(8, 4);
        net.b1.assign(8, 0.0);
        net.w2 = Matrix(3, 8);
        net.b2.assign(3, 0.0);
        Vec g = membership(net, Vec{0.4, -0.2, 1.0, 0.0});
        for (double v : g) CHECK(v == doctest::Approx(1.0 / 3));
    }
    SUBCASE("K=1 is always [1]") {
        MembershipNet net = MembershipNet::init(4, 1, 8, rng);
        Vec g = membership(net, Vec{0.5, 0.5, -0.5, 2.0});
        REQUIRE(g.size() == 1);
        CHECK(g[0] == 1.0);
    }
    SUBCASE("gamma sums to one") {
        MembershipNet net = MembershipNet::init(5, 4, 8, rng);
        for (int trial = 0; trial < 50; ++trial) {
            Vec z(5);
            for (double& v : z) v = rng.uniform(-3.0, 3.0);
            Vec g = membership(net, z);
            double s = 0.0;
            for (double v : g) s += v;
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
    SUBCASE("tape and plain membership agree") {
        MembershipNet net = MembershipNet::init(4, 3, 8, rng);
        Vec z{0.3, -1.0, 0.7, 0.2};
        Tape tape;
        int g = membership_node(tape, net, tape.constant(z));
        Vec plain = membership(net, z);
        Vec taped = tape.value_vec(g);
        for (std::size_t i = 0; i < plain.size(); ++i)
            CHECK(taped[i] == doctest::Approx(plain[i]).epsilon(1e-14));
    }
}

TEST_CASE("mixture_weights") {
    CHECK_THROWS_AS(mixture_weights({}), UsageError);
    CHECK(mixture_weights({Vec{0.25, 0.75}}) == Vec{0.25, 0.75});
    Vec phi = mixture_weights({Vec{1.0, 0.0}, Vec{0.0, 1.0}});
    CHECK(phi == Vec{0.5, 0.5});
    phi = mixture_weights({Vec{0.5, 0.5}, Vec{0.5, 0.5}, Vec{0.5, 0.5}});
    CHECK(phi == Vec{0.5, 0.5});
}

TEST_CASE("energy closed form: K=1, d=1, standard normal at the mean") {
    GmmModel m;
    m.k = 1;
    m.phi = {1.0};
    m.mu = {Vec{0.0}};
    Matrix s(1, 1);
    s(0, 0) = 1.0;
    m.sigma = {s};
    m.reg_epsilon = 0.0;
    CHECK(energy(m, Vec{0.0}) == doctest::Approx(0.5 * std::log(2.0 * 3.14159265358979323846)));
    // 0.9189...
    CHECK(energy(m, Vec{0.0}) == doctest::Approx(0.9189385332046727));

    // the mean minimizes the energy along a line through it
    double at_mu = energy(m, Vec{0.0});
    for (double t : {-2.0, -0.5, 0.3, 1.7})
        CHECK(energy(m, Vec{t}) > at_mu);
}

TEST_CASE("energy matches the naive direct-sum oracle within 1e-9") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        int d = 2 + static_cast<int>(rng.index(4));
        GmmModel m = random_model(2, d, rng);
        for (int i = 0; i < 5; ++i) {
            Vec z(static_cast<std::size_t>(d));
            for (double& v : z) v = rng.uniform(-3.0, 3.0);
            CHECK(energy(m, z) == doctest::Approx(naive_energy(m, z)).epsilon(1e-9));
        }
    }
}

TEST_CASE("energy_node agrees with plain energy and differentiates") {
    Rng rng(17);
    GmmModel m = random_model(3, 3, rng);
    GmmFactors f = factorize(m);
    Vec z{0.4, -0.6, 1.1};
    Vec phi = m.phi;

    Tape tape;
    int e = energy_node(tape, f, tape.constant(z), tape.constant(phi));
    CHECK(tape.scalar(e) == doctest::Approx(energy(m, z)).epsilon(1e-12));

    ParamRef refs[2] = {param_ref(z), param_ref(phi)};
    double err = finite_diff_check(
        [&](Tape& t) { return energy_node(t, f, t.param(z), t.param(phi)); },
        refs);
    CHECK(err < 1e-4);
}

TEST_CASE("energy stays finite for large latents") {
    Rng rng(23);
    GmmModel m = random_model(2, 4, rng);
    m.reg_epsilon = 1e-6;
    Vec z(4, 1e6);
    CHECK(std::isfinite(energy(m, z)));
}

TEST_CASE("em_update with K=1 recovers batch mean and covariance exactly") {
    Rng rng(31);
    int d = 3;
    std::vector<Vec> zs = sample_blob(Vec{1.0, -2.0, 0.5}, 1.3, 40, rng);

    GmmModel m;
    m.k = 1;
    m.phi = {1.0};
    m.mu = {Vec(static_cast<std::size_t>(d), 0.0)};
    m.sigma = {Matrix::identity(d)};
    m.reg_epsilon = 1e-6;
    em_update(m, zs);

    // closed form with identical accumulation order
    Vec mean(static_cast<std::size_t>(d), 0.0);
    for (const Vec& z : zs)
        for (int t = 0; t < d; ++t) mean[static_cast<std::size_t>(t)] += z[static_cast<std::size_t>(t)];
    for (double& x : mean) x /= static_cast<double>(zs.size());
    for (int t = 0; t < d; ++t)
        CHECK(m.mu[0][static_cast<std::size_t>(t)] ==
              doctest::Approx(mean[static_cast<std::size_t>(t)]).epsilon(1e-13));

    Matrix cov(d, d);
    for (const Vec& z : zs)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                cov(a, b) += (z[static_cast<std::size_t>(a)] - mean[static_cast<std::size_t>(a)]) *
                             (z[static_cast<std::size_t>(b)] - mean[static_cast<std::size_t>(b)]);
    for (double& x : cov.data) x /= static_cast<double>(zs.size());
    for (int a = 0; a < d; ++a) cov(a, a) += m.reg_epsilon;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            CHECK(m.sigma[0](a, b) == doctest::Approx(cov(a, b)).epsilon(1e-12));
}

TEST_CASE("em_update separates two clusters like the brute-force oracle") {
    Rng rng(37);
    std::vector<Vec> zs = sample_blob(Vec{10.0, 10.0}, 0.8, 30, rng);
    std::vector<Vec> neg = sample_blob(Vec{-10.0, -10.0}, 0.8, 30, rng);
    zs.insert(zs.end(), neg.begin(), neg.end());

    GmmModel m;
    m.k = 2;
    m.phi = {0.5, 0.5};
    m.mu = {Vec{1.0, 1.0}, Vec{-1.0, -1.0}};
    m.sigma = {Matrix::identity(2), Matrix::identity(2)};
    m.reg_epsilon = 1e-6;
    GmmModel oracle = m;

    for (int it = 0; it < 50; ++it) {
        em_update(m, zs);
        naive_em_step(oracle, zs);
    }
    for (int k = 0; k < 2; ++k) {
        double sign = m.mu[static_cast<std::size_t>(k)][0] > 0 ? 10.0 : -10.0;
        CHECK(std::abs(m.mu[static_cast<std::size_t>(k)][0] - sign) < 0.1);
        CHECK(std::abs(m.mu[static_cast<std::size_t>(k)][1] - sign) < 0.1);
        for (int t = 0; t < 2; ++t)
            CHECK(m.mu[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)] ==
                  doctest::Approx(oracle.mu[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)])
                      .epsilon(1e-6));
    }
}

TEST_CASE("em_update log-likelihood is non-decreasing with phi fixed") {
    for (std::uint64_t seed = 41; seed < 46; ++seed) {
        Rng rng(seed);
        std::vector<Vec> zs = sample_blob(Vec{2.0, 0.0, -1.0}, 1.0, 25, rng);
        auto extra = sample_blob(Vec{-3.0, 1.0, 2.0}, 0.6, 25, rng);
        zs.insert(zs.end(), extra.begin(), extra.end());

        GmmModel m = random_model(3, 3, rng);
        double prev = log_likelihood(m, zs);
        for (int it = 0; it < 50; ++it) {
            em_update(m, zs);
            double cur = log_likelihood(m, zs);
            CHECK(cur >= prev - 1e-9);
            prev = cur;
        }
    }
}

TEST_CASE("em_update keeps covariances symmetric and positive definite") {
    Rng rng(53);
    std::vector<Vec> zs = sample_blob(Vec{0.0, 0.0}, 2.0, 40, rng);
    GmmModel m = random_model(2, 2, rng);
    for (int it = 0; it < 20; ++it) {
        em_update(m, zs);
        for (const Matrix& s : m.sigma) {
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    CHECK(std::abs(s(a, b) - s(b, a)) < 1e-12);
            Matrix lower;
            CHECK(cholesky(s, lower));
        }
    }
}

TEST_CASE("em_update usage errors") {
    GmmModel m;
    m.k = 3;
    m.phi = {0.4, 0.3, 0.3};
    m.mu = {Vec{0.0}, Vec{1.0}, Vec{2.0}};
    m.sigma = {Matrix::identity(1), Matrix::identity(1), Matrix::identity(1)};
    std::vector<Vec> two = {Vec{0.1}, Vec{0.9}};
    CHECK_THROWS_AS(em_update(m, two), UsageError);
}

TEST_CASE("K=1 energy ordering equals Mahalanobis ordering") {
    Rng rng(61);
    GmmModel m = random_model(1, 3, rng);
    GmmFactors f = factorize(m);
    std::vector<Vec> zs;
    for (int i = 0; i < 20; ++i) {
        Vec z(3);
        for (double& v : z) v = rng.uniform(-4.0, 4.0);
        zs.push_back(z);
    }
    auto mahalanobis = [&](const Vec& z) {
        Vec diff(3);
        for (int t = 0; t < 3; ++t) diff[static_cast<std::size_t>(t)] = z[static_cast<std::size_t>(t)] - m.mu[0][static_cast<std::size_t>(t)];
        Vec y = matvec(f.whiten[0], diff);
        return dot(y, y);
    };
    for (std::size_t i = 0; i < zs.size(); ++i)
        for (std::size_t j = 0; j < zs.size(); ++j) {
            if (mahalanobis(zs[i]) < mahalanobis(zs[j]))
                CHECK(energy(m, zs[i]) < energy(m, zs[j]));
        }
}

TEST_CASE("factorize reports the failing component") {
    GmmModel m;
    m.k = 2;
    m.phi = {0.5, 0.5};
    m.mu = {Vec{0.0}, Vec{0.0}};
    Matrix bad(1, 1);
    bad(0, 0) = -5.0;
    m.sigma = {Matrix::identity(1), bad};
    m.reg_epsilon = 1e-6;
    CHECK_THROWS_WITH_AS(factorize(m), doctest::Contains("component 1"), NumericError);
}
