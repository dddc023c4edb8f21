#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "etnet/linalg.hpp"

namespace etnet {

// Record of one forward pass for reverse-mode differentiation. Nodes are
// vector-valued (a scalar is a length-1 node); values and adjoints live in
// flat arenas that are reused across passes. A tape is rebuilt for every
// forward pass and is single-writer: one pass, one thread.
class Tape {
public:
    enum class Op : std::uint8_t {
        Leaf,
        Affine,    // W*x + b  (b optional); W may be a non-trainable constant
        Add,
        Sub,
        Mul,       // Hadamard
        Div,
        Scale,     // k0 * a
        AddConst,  // a + k0
        LinComb2,  // k0*a + k1*b
        MulAdd2,   // a.*b + c.*d
        GruBlend,  // (1-u).*hp + u.*ht
        Sigmoid,
        Tanh,
        Softmax,
        Sqrt,
        Log,
        Exp,
        Dot,       // scalar
        SumSq,     // scalar
        Concat,    // n-ary
        Slice,
    };

    // -- leaves -------------------------------------------------------------

    int constant(std::span<const double> v);
    int constant(double x);
    int constant_matrix(const Matrix& m); // non-trainable, usable in matvec/affine
    // Bind a trainable tensor. Memoized per pass: binding the same storage
    // twice returns the same node, so adjoints accumulate across all uses.
    int param(Matrix& m);
    int param(Vec& v);

    // -- ops ----------------------------------------------------------------

    int matvec(int w, int x);            // w must be a matrix-shaped leaf
    int affine(int w, int b, int x);     // b = -1 for no bias
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int div(int a, int b);
    int scale(int a, double k);
    int add_const(int a, double k);
    int lincomb2(int a, int b, double ka, double kb);
    int muladd2(int a, int b, int c, int d);
    int gru_blend(int u, int h_prev, int h_tilde);
    int sigmoid(int a);
    int tanh(int a);
    int softmax(int a);
    int sqrt(int a);
    int log(int a);
    int exp(int a);
    int dot(int a, int b);
    int sum_sq(int a);
    int concat(std::span<const int> parts);
    int concat2(int a, int b);
    int slice(int a, int offset, int len);

    // -- access -------------------------------------------------------------

    int size(int id) const { return nodes_[id].n; }
    std::span<const double> value(int id) const {
        const Node& nd = nodes_[id];
        return {vals_.data() + nd.off, static_cast<std::size_t>(nd.n)};
    }
    double scalar(int id) const;
    Vec value_vec(int id) const {
        auto v = value(id);
        return Vec(v.begin(), v.end());
    }

    // Replays adjoint rules in reverse; loss must be a scalar node.
    void backward(int loss);

    std::span<const double> adjoint(int id) const {
        const Node& nd = nodes_[id];
        return {adjs_.data() + nd.off, static_cast<std::size_t>(nd.n)};
    }
    // Gradient of the last backward() pass for a bound tensor, keyed by its
    // storage pointer. Null if the tensor was never bound on this pass.
    const double* param_grad(const double* storage) const;

    // Clear for the next pass; arenas keep their capacity.
    void reset();

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Op op = Op::Leaf;
        bool needs_grad = false;
        int n = 0;          // output length
        int rows = 0, cols = 0;
        int a = -1, b = -1, c = -1, d = -1;
        int off = 0;        // offset into arenas
        int aux = 0;        // slice offset / concat parent-pool offset
        int naux = 0;       // concat parent count
        double k0 = 0.0, k1 = 0.0;
    };

    int push(Node nd);
    double* val_ptr(int id) { return vals_.data() + nodes_[id].off; }
    const double* val_ptr(int id) const { return vals_.data() + nodes_[id].off; }
    double* adj_ptr(int id) { return adjs_.data() + nodes_[id].off; }
    bool wants(int id) const { return id >= 0 && nodes_[id].needs_grad; }
    void check_same_size(int a, int b, const char* op) const;

    std::vector<Node> nodes_;
    std::vector<double> vals_;
    std::vector<double> adjs_;
    std::vector<int> parent_pool_;
    std::unordered_map<const double*, int> param_ids_;
};

// Central-difference gradient check. `make_loss` rebuilds the forward pass on
// a fresh tape and returns the scalar loss node; `params` lists every tensor
// it reads. Returns the worst relative error, denominator max(|a|,|b|,1e-8).
double finite_diff_check(const std::function<int(Tape&)>& make_loss,
                         std::span<const ParamRef> params, double step = 1e-5);

} // namespace etnet
