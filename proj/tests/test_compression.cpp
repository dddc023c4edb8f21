#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "etnet/compression.hpp"
#include "etnet/training.hpp"

using namespace etnet;

TEST_CASE("d_rel examples") {
    CHECK(d_rel(Vec{1.0, 2.0}, Vec{1.0, 2.0}) == 0.0);
    CHECK(d_rel(Vec{3.0, 4.0}, Vec{0.0, 0.0}) == doctest::Approx(1.0));
    CHECK(d_rel(Vec{1.0, 0.0}, Vec{0.0, 1.0}) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(d_rel(Vec{1.0}, Vec{1.0, 2.0}), ShapeError);

    bool degen = false;
    double v = d_rel(Vec{0.0, 0.0}, Vec{1.0, 0.0}, &degen);
    CHECK(degen);
    CHECK(v == doctest::Approx(1.0 / 1e-12));
}

TEST_CASE("d_cos examples") {
    CHECK(d_cos(Vec{1.0, 2.0}, Vec{1.0, 2.0}) == doctest::Approx(1.0));
    CHECK(d_cos(Vec{1.0, 0.0}, Vec{0.0, 1.0}) == doctest::Approx(0.0));
    CHECK(d_cos(Vec{1.0, 2.0}, Vec{2.0, 4.0}) == doctest::Approx(1.0));
    CHECK(d_cos(Vec{0.0, 0.0}, Vec{1.0, 1.0}) == 0.0);
}

TEST_CASE("d_cos positive scaling invariance property") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng.index(6));
        Vec x(static_cast<std::size_t>(n));
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        double alpha = rng.uniform(0.1, 5.0);
        Vec ax(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) ax[i] = alpha * x[i];
        CHECK(d_cos(x, ax) == doctest::Approx(1.0));
        CHECK(d_rel(x, x) == 0.0);
    }
}

TEST_CASE("select_branches") {
    CHECK(select_branches(Vec{0.5}, Vec{0.9}) == std::pair<int, int>{0, 0});
    CHECK(select_branches(Vec{0.5, 0.2, 0.9}, Vec{0.5, 0.5, 0.5}).first == 1);
    CHECK(select_branches(Vec{0.5, 0.5, 0.5}, Vec{0.1, 0.99, 0.7}).second == 1);
    // ties break to the lowest branch index
    CHECK(select_branches(Vec{0.3, 0.3}, Vec{0.7, 0.7}) == std::pair<int, int>{0, 0});
}

TEST_CASE("branch selection is permutation-covariant") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        Vec rel(4), cos(4);
        for (double& v : rel) v = rng.uniform(0.0, 2.0);
        for (double& v : cos) v = rng.uniform(-1.0, 1.0);
        auto [i, j] = select_branches(rel, cos);
        // rotate by one
        Vec rel2{rel[3], rel[0], rel[1], rel[2]};
        Vec cos2{cos[3], cos[0], cos[1], cos[2]};
        auto [i2, j2] = select_branches(rel2, cos2);
        // distinct values almost surely, so the winner follows the rotation
        CHECK((i + 1) % 4 == i2);
        CHECK((j + 1) % 4 == j2);
    }
}

TEST_CASE("w_forward reduction cases") {
    SUBCASE("N_E=1 with identity fusion returns the branch state") {
        WNetwork net = WNetwork::init(1, 3, 3, 123);
        net.fusion_w = Matrix::identity(3);
        net.fusion_b.assign(3, 0.0);
        Vec x{0.2, 0.8, 0.5, 0.1};
        Tape tape;
        WForward f = w_forward(tape, net, x);
        CHECK(tape.value_vec(f.z_c) == tape.value_vec(f.branch_state[0]));
        CHECK(f.recon.size() == 1);
        CHECK(tape.size(f.recon[0]) == 4);
    }
    SUBCASE("all-zero parameters reconstruct zero") {
        WNetwork net = WNetwork::init(2, 3, 3, 123);
        for (WBranch& b : net.branches) {
            for (Matrix* m : {&b.w_out}) *m = Matrix(1, 3);
            b.b_out.assign(1, 0.0);
            b.enc.w_skip = Matrix(3, 4);
            b.enc.b_skip.assign(3, 0.0);
            b.dec.w_skip = Matrix(3, 4);
            b.dec.b_skip.assign(3, 0.0);
            for (SrnnLayer* l : {&b.enc, &b.dec}) {
                LstmCell& c = std::get<LstmCell>(l->cell);
                for (Matrix* m : {&c.w_o, &c.w_f, &c.w_i, &c.w_c}) *m = Matrix(3, 4);
                for (Vec* bb : {&c.b_o, &c.b_f, &c.b_i, &c.b_c}) bb->assign(3, 0.0);
            }
        }
        Vec x{0.3, 0.6, 0.9};
        Tape tape;
        WForward f = w_forward(tape, net, x);
        for (int rec : f.recon)
            for (double v : tape.value_vec(rec)) CHECK(v == 0.0);
    }
    SUBCASE("empty window is a usage error") {
        WNetwork net = WNetwork::init(1, 2, 2, 1);
        Tape tape;
        CHECK_THROWS_AS(w_forward(tape, net, Vec{}), UsageError);
    }
}

TEST_CASE("w_extended_latent selects branches and has length latent+2") {
    WNetwork net = WNetwork::init(3, 4, 4, 99);
    Vec x{0.1, 0.9, 0.4, 0.7, 0.2, 0.5};
    Tape tape;
    WExtended ext = w_extended_latent(tape, net, x);
    CHECK(tape.size(ext.z_ext) == 4 + 2);
    CHECK(ext.rel_errors.size() == 3);
    // the stored scalars equal the plain recomputation on the chosen branches
    Vec z = tape.value_vec(ext.z_ext);
    Vec rec_i = tape.value_vec(ext.fwd.recon[static_cast<std::size_t>(ext.argmin_rel)]);
    Vec rec_j = tape.value_vec(ext.fwd.recon[static_cast<std::size_t>(ext.argmax_cos)]);
    CHECK(z[4] == doctest::Approx(d_rel(x, rec_i)).epsilon(1e-9));
    CHECK(z[5] == doctest::Approx(d_cos(x, rec_j)).epsilon(1e-9));
}

TEST_CASE("d_forward reduction and schedule") {
    SUBCASE("dilation schedule grows as 3^i") {
        DNetwork net1 = DNetwork::init(1, 2, 2, 5);
        CHECK(net1.dilations() == std::vector<int>{3});
        DNetwork net3 = DNetwork::init(3, 2, 2, 5);
        CHECK(net3.dilations() == std::vector<int>{3, 9, 27});
    }
    SUBCASE("zero parameters reconstruct zero") {
        DNetwork net = DNetwork::init(2, 2, 2, 5);
        for (auto* layers : {&net.enc_layers, &net.dec_layers})
            for (DilatedLayer& l : *layers) {
                int in = l.cell.input();
                for (Matrix* m : {&l.cell.w_u, &l.cell.w_h, &l.cell.w_r}) *m = Matrix(2, 2 + in);
                for (Vec* b : {&l.cell.b_u, &l.cell.b_h, &l.cell.b_r}) b->assign(2, 0.0);
            }
        net.w_out = Matrix(1, 2);
        net.b_out.assign(1, 0.0);
        Vec x{0.4, 0.1, 0.8, 0.2};
        Tape tape;
        DForward f = d_forward(tape, net, x);
        for (double v : tape.value_vec(f.recon)) CHECK(v == 0.0);
    }
    SUBCASE("extended latent length is latent+2") {
        DNetwork net = DNetwork::init(2, 3, 3, 5);
        Vec x{0.4, 0.1, 0.8, 0.2, 0.6};
        Tape tape;
        DExtended ext = d_extended_latent(tape, net, x);
        CHECK(tape.size(ext.z_ext) == 5);
    }
}

TEST_CASE("decoder output length equals input length across L") {
    WNetwork wnet = WNetwork::init(2, 3, 3, 42);
    DNetwork dnet = DNetwork::init(2, 3, 3, 42);
    for (int len : {4, 7, 16, 33, 120, 512}) {
        Vec x(static_cast<std::size_t>(len));
        Rng rng(static_cast<std::uint64_t>(len));
        for (double& v : x) v = rng.uniform(0.0, 1.0);
        Tape tape;
        WForward wf = w_forward(tape, wnet, x);
        for (int rec : wf.recon) CHECK(tape.size(rec) == len);
        tape.reset();
        DForward df = d_forward(tape, dnet, x);
        CHECK(tape.size(df.recon) == len);
    }
}

TEST_CASE("reconstruction-loss gradients pass finite differences end to end") {
    // Eq-10-style reconstruction term through encoder, decoder and skip paths.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        WNetwork net = WNetwork::init(2, 3, 3, seed);
        Vec x(8);
        Rng rng(seed * 7);
        for (double& v : x) v = rng.uniform(0.0, 1.0);
        std::vector<ParamRef> refs;
        collect_params(net, refs);
        double err = finite_diff_check(
            [&](Tape& t) {
                WForward f = w_forward(t, net, x);
                int xc = t.constant(x);
                int acc = -1;
                for (int rec : f.recon) {
                    int ssq = t.sum_sq(t.sub(xc, rec));
                    acc = acc < 0 ? ssq : t.add(acc, ssq);
                }
                return t.scale(acc, 1.0 / (2.0 * 8.0));
            },
            refs);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("training a W network on a constant series drives MSE below 1e-3") {
    // single branch, short constant window; 200 epochs of full-batch Adam on
    // the reconstruction term only
    WNetwork net = WNetwork::init(1, 4, 4, 7);
    Vec x(12, 0.6);
    std::vector<ParamRef> refs;
    collect_params(net, refs);
    AdamState adam;
    std::vector<Vec> grads(refs.size());
    Tape tape;
    double mse = 1.0;
    for (int epoch = 0; epoch < 200; ++epoch) {
        tape.reset();
        WForward f = w_forward(tape, net, x);
        int xc = tape.constant(x);
        int loss = tape.scale(tape.sum_sq(tape.sub(xc, f.recon[0])), 1.0 / 12.0);
        tape.backward(loss);
        for (std::size_t i = 0; i < refs.size(); ++i) {
            const double* g = tape.param_grad(refs[i].p);
            grads[i].assign(static_cast<std::size_t>(refs[i].n), 0.0);
            if (g) std::copy(g, g + refs[i].n, grads[i].begin());
        }
        adam_step(adam, refs, grads, 5e-3);
        mse = tape.scalar(loss);
    }
    CHECK(mse < 1e-3);
}
