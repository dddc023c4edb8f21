#include "etnet/tape.hpp"

#include <algorithm>
#include <cmath>

namespace etnet {

int Tape::push(Node nd) {
    nd.off = static_cast<int>(vals_.size());
    vals_.resize(vals_.size() + static_cast<std::size_t>(nd.n));
    nodes_.push_back(nd);
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(std::span<const double> v) {
    Node nd;
    nd.op = Op::Leaf;
    nd.n = static_cast<int>(v.size());
    nd.rows = nd.n;
    nd.cols = 1;
    int id = push(nd);
    std::copy(v.begin(), v.end(), val_ptr(id));
    return id;
}

int Tape::constant(double x) { return constant(std::span<const double>(&x, 1)); }

int Tape::constant_matrix(const Matrix& m) {
    Node nd;
    nd.op = Op::Leaf;
    nd.n = static_cast<int>(m.data.size());
    nd.rows = m.rows;
    nd.cols = m.cols;
    int id = push(nd);
    std::copy(m.data.begin(), m.data.end(), val_ptr(id));
    return id;
}

int Tape::param(Matrix& m) {
    auto it = param_ids_.find(m.data.data());
    if (it != param_ids_.end()) return it->second;
    Node nd;
    nd.op = Op::Leaf;
    nd.needs_grad = true;
    nd.n = static_cast<int>(m.data.size());
    nd.rows = m.rows;
    nd.cols = m.cols;
    int id = push(nd);
    std::copy(m.data.begin(), m.data.end(), val_ptr(id));
    param_ids_.emplace(m.data.data(), id);
    return id;
}

int Tape::param(Vec& v) {
    auto it = param_ids_.find(v.data());
    if (it != param_ids_.end()) return it->second;
    Node nd;
    nd.op = Op::Leaf;
    nd.needs_grad = true;
    nd.n = static_cast<int>(v.size());
    nd.rows = nd.n;
    nd.cols = 1;
    int id = push(nd);
    std::copy(v.begin(), v.end(), val_ptr(id));
    param_ids_.emplace(v.data(), id);
    return id;
}

void Tape::check_same_size(int a, int b, const char* op) const {
    if (nodes_[a].n != nodes_[b].n)
        throw ShapeError(std::string(op) + ": operand lengths " + std::to_string(nodes_[a].n) +
                         " and " + std::to_string(nodes_[b].n) + " differ");
}

int Tape::matvec(int w, int x) { return affine(w, -1, x); }

int Tape::affine(int w, int b, int x) {
    const Node& wn = nodes_[w];
    const Node& xn = nodes_[x];
    if (wn.cols != xn.n)
        throw ShapeError("affine: matrix is " + std::to_string(wn.rows) + "x" +
                         std::to_string(wn.cols) + " but vector has length " +
                         std::to_string(xn.n));
    if (b >= 0 && nodes_[b].n != wn.rows) throw ShapeError("affine: bias length mismatch");
    Node nd;
    nd.op = Op::Affine;
    nd.n = wn.rows;
    nd.rows = wn.rows;
    nd.cols = wn.cols;
    nd.a = w;
    nd.b = b;
    nd.c = x;
    nd.needs_grad = wants(w) || wants(b) || wants(x);
    int id = push(nd);
    const double* wp = val_ptr(w);
    const double* xp = val_ptr(x);
    const double* bp = b >= 0 ? val_ptr(b) : nullptr;
    double* out = val_ptr(id);
    for (int r = 0; r < nd.rows; ++r) {
        const double* row = wp + static_cast<std::size_t>(r) * nd.cols;
        double acc = bp ? bp[r] : 0.0;
        for (int c = 0; c < nd.cols; ++c) acc += row[c] * xp[c];
        out[r] = acc;
    }
    return id;
}

#define ETNET_BINARY(NAME, OPCODE, EXPR)                          \
    int Tape::NAME(int a, int b) {                                \
        check_same_size(a, b, #NAME);                             \
        Node nd;                                                  \
        nd.op = Op::OPCODE;                                       \
        nd.n = nodes_[a].n;                                       \
        nd.a = a;                                                 \
        nd.b = b;                                                 \
        nd.needs_grad = wants(a) || wants(b);                     \
        int id = push(nd);                                        \
        const double* pa = val_ptr(a);                            \
        const double* pb = val_ptr(b);                            \
        double* out = val_ptr(id);                                \
        for (int i = 0; i < nd.n; ++i) out[i] = (EXPR);           \
        return id;                                                \
    }

ETNET_BINARY(add, Add, pa[i] + pb[i])
ETNET_BINARY(sub, Sub, pa[i] - pb[i])
ETNET_BINARY(mul, Mul, pa[i] * pb[i])
ETNET_BINARY(div, Div, pa[i] / pb[i])
#undef ETNET_BINARY

int Tape::scale(int a, double k) {
    Node nd;
    nd.op = Op::Scale;
    nd.n = nodes_[a].n;
    nd.a = a;
    nd.k0 = k;
    nd.needs_grad = wants(a);
    int id = push(nd);
    const double* pa = val_ptr(a);
    double* out = val_ptr(id);
    for (int i = 0; i < nd.n; ++i) out[i] = k * pa[i];
    return id;
}

int Tape::add_const(int a, double k) {
    Node nd;
    nd.op = Op::AddConst;
    nd.n = nodes_[a].n;
    nd.a = a;
    nd.k0 = k;
    nd.needs_grad = wants(a);
    int id = push(nd);
    const double* pa = val_ptr(a);
    double* out = val_ptr(id);
    for (int i = 0; i < nd.n; ++i) out[i] = pa[i] + k;
    return id;
}

int Tape::lincomb2(int a, int b, double ka, double kb) {
    check_same_size(a, b, "lincomb2");
    Node nd;
    nd.op = Op::LinComb2;
    nd.n = nodes_[a].n;
    nd.a = a;
    nd.b = b;
    nd.k0 = ka;
    nd.k1 = kb;
    nd.needs_grad = wants(a) || wants(b);
    int id = push(nd);
    const double* pa = val_ptr(a);
    const double* pb = val_ptr(b);
    double* out = val_ptr(id);
    for (int i = 0; i < nd.n; ++i) out[i] = ka * pa[i] + kb * pb[i];
    return id;
}

int Tape::muladd2(int a, int b, int c, int d) {
    check_same_size(a, b, "muladd2");
    check_same_size(c, d, "muladd2");
    check_same_size(a, c, "muladd2");
    Node nd;
    nd.op = Op::MulAdd2;
    nd.n = nodes_[a].n;
    nd.a = a;
    nd.b = b;
    nd.c = c;
    nd.d = d;
    nd.needs_grad = wants(a) || wants(b) || wants(c) || wants(d);
    int id = push(nd);
    const double* pa = val_ptr(a);
    const double* pb = val_ptr(b);
    const double* pc = val_ptr(c);
    const double* pd = val_ptr(d);
    double* out = val_ptr(id);
    for (int i = 0; i < nd.n; ++i) out[i] = pa[i] * pb[i] + pc[i] * pd[i];
    return id;
}

int Tape::gru_blend(int u, int h_prev, int h_tilde) {
    check_same_size(u, h_prev, "gru_blend");
    check_same_size(u, h_tilde, "gru_blend");
    Node nd;
    nd.op = Op::GruBlend;
    nd.n = nodes_[u].n;
    nd.a = u;
    nd.b = h_prev;
    nd.c = h_tilde;
    nd.needs_grad = wants(u) || wants(h_prev) || wants(h_tilde);
    int id = push(nd);
    const double* pu = val_ptr(u);
    const double* ph = val_ptr(h_prev);
    const double* pt = val_ptr(h_tilde);
    double* out = val_ptr(id);
    for (int i = 0; i < nd.n; ++i) out[i] = (1.0 - pu[i]) * ph[i] + pu[i] * pt[i];
    return id;
}

#define ETNET_UNARY(NAME, OPCODE, EXPR)                 \
    int Tape::NAME(int a) {                             \
        Node nd;                                        \
        nd.op = Op::OPCODE;                             \
        nd.n = nodes_[a].n;                             \
        nd.a = a;                                       \
        nd.needs_grad = wants(a);                       \
        int id = push(nd);                              \
        const double* pa = val_ptr(a);                  \
        double* out = val_ptr(id);                      \
        for (int i = 0; i < nd.n; ++i) out[i] = (EXPR); \
        return id;                                      \
    }

ETNET_UNARY(sigmoid, Sigmoid, 1.0 / (1.0 + std::exp(-pa[i])))
ETNET_UNARY(tanh, Tanh, std::tanh(pa[i]))
ETNET_UNARY(sqrt, Sqrt, std::sqrt(pa[i]))
ETNET_UNARY(log, Log, std::log(pa[i]))
ETNET_UNARY(exp, Exp, std::exp(pa[i]))
#undef ETNET_UNARY

int Tape::softmax(int a) {
    Node nd;
    nd.op = Op::Softmax;
    nd.n = nodes_[a].n;
    nd.a = a;
    nd.needs_grad = wants(a);
    int id = push(nd);
    const double* pa = val_ptr(a);
    double* out = val_ptr(id);
    double m = pa[0];
    for (int i = 1; i < nd.n; ++i) m = std::max(m, pa[i]);
    double sum = 0.0;
    for (int i = 0; i < nd.n; ++i) {
        out[i] = std::exp(pa[i] - m);
        sum += out[i];
    }
    for (int i = 0; i < nd.n; ++i) out[i] /= sum;
    return id;
}

int Tape::dot(int a, int b) {
    check_same_size(a, b, "dot");
    Node nd;
    nd.op = Op::Dot;
    nd.n = 1;
    nd.a = a;
    nd.b = b;
    nd.needs_grad = wants(a) || wants(b);
    int id = push(nd);
    const double* pa = val_ptr(a);
    const double* pb = val_ptr(b);
    double acc = 0.0;
    for (int i = 0; i < nodes_[a].n; ++i) acc += pa[i] * pb[i];
    *val_ptr(id) = acc;
    return id;
}

int Tape::sum_sq(int a) {
    Node nd;
    nd.op = Op::SumSq;
    nd.n = 1;
    nd.a = a;
    nd.needs_grad = wants(a);
    int id = push(nd);
    const double* pa = val_ptr(a);
    double acc = 0.0;
    for (int i = 0; i < nodes_[a].n; ++i) acc += pa[i] * pa[i];
    *val_ptr(id) = acc;
    return id;
}

int Tape::concat(std::span<const int> parts) {
    if (parts.empty()) throw UsageError("concat: no operands");
    Node nd;
    nd.op = Op::Concat;
    nd.aux = static_cast<int>(parent_pool_.size());
    nd.naux = static_cast<int>(parts.size());
    int total = 0;
    for (int p : parts) {
        parent_pool_.push_back(p);
        total += nodes_[p].n;
        nd.needs_grad = nd.needs_grad || wants(p);
    }
    nd.n = total;
    int id = push(nd);
    double* out = val_ptr(id);
    for (int p : parts) {
        const double* pp = val_ptr(p);
        out = std::copy(pp, pp + nodes_[p].n, out);
    }
    return id;
}

int Tape::concat2(int a, int b) {
    int parts[2] = {a, b};
    return concat(parts);
}

int Tape::slice(int a, int offset, int len) {
    if (offset < 0 || len <= 0 || offset + len > nodes_[a].n)
        throw ShapeError("slice: range out of bounds");
    Node nd;
    nd.op = Op::Slice;
    nd.n = len;
    nd.a = a;
    nd.aux = offset;
    nd.needs_grad = wants(a);
    int id = push(nd);
    const double* pa = val_ptr(a) + offset;
    std::copy(pa, pa + len, val_ptr(id));
    return id;
}

double Tape::scalar(int id) const {
    if (nodes_[id].n != 1) throw UsageError("scalar: node is not scalar");
    return *val_ptr(id);
}

void Tape::backward(int loss) {
    if (loss < 0 || loss >= static_cast<int>(nodes_.size()))
        throw UsageError("backward: unknown node");
    if (nodes_[loss].n != 1) throw UsageError("backward: loss must be a scalar");
    adjs_.assign(vals_.size(), 0.0);
    adjs_[nodes_[loss].off] = 1.0;

    for (int i = loss; i >= 0; --i) {
        const Node& nd = nodes_[i];
        if (!nd.needs_grad || nd.op == Op::Leaf) continue;
        const double* g = adjs_.data() + nd.off;
        const double* y = vals_.data() + nd.off;
        switch (nd.op) {
        case Op::Affine: {
            const double* wp = val_ptr(nd.a);
            const double* xp = val_ptr(nd.c);
            double* dx = wants(nd.c) ? adj_ptr(nd.c) : nullptr;
            double* dw = wants(nd.a) ? adj_ptr(nd.a) : nullptr;
            for (int r = 0; r < nd.rows; ++r) {
                double gr = g[r];
                if (gr == 0.0) continue;
                const double* row = wp + static_cast<std::size_t>(r) * nd.cols;
                if (dw) {
                    double* drow = dw + static_cast<std::size_t>(r) * nd.cols;
                    for (int c = 0; c < nd.cols; ++c) drow[c] += gr * xp[c];
                }
                if (dx)
                    for (int c = 0; c < nd.cols; ++c) dx[c] += gr * row[c];
            }
            if (nd.b >= 0 && wants(nd.b)) {
                double* db = adj_ptr(nd.b);
                for (int r = 0; r < nd.rows; ++r) db[r] += g[r];
            }
            break;
        }
        case Op::Add: {
            if (wants(nd.a)) {
                double* da = adj_ptr(nd.a);
                for (int k = 0; k < nd.n; ++k) da[k] += g[k];
            }
            if (wants(nd.b)) {
                double* db = adj_ptr(nd.b);
                for (int k = 0; k < nd.n; ++k) db[k] += g[k];
            }
            break;
        }
        case Op::Sub: {
            if (wants(nd.a)) {
                double* da = adj_ptr(nd.a);
                for (int k = 0; k < nd.n; ++k) da[k] += g[k];
            }
            if (wants(nd.b)) {
                double* db = adj_ptr(nd.b);
                for (int k = 0; k < nd.n; ++k) db[k] -= g[k];
            }
            break;
        }
        case Op::Mul: {
            const double* pa = val_ptr(nd.a);
            const double* pb = val_ptr(nd.b);
            if (wants(nd.a)) {
                double* da = adj_ptr(nd.a);
                for (int k = 0; k < nd.n; ++k) da[k] += g[k] * pb[k];
            }
            if (wants(nd.b)) {
                double* db = adj_ptr(nd.b);
                for (int k = 0; k < nd.n; ++k) db[k] += g[k] * pa[k];
            }
            break;
        }
        case Op::Div: {
            const double* pb = val_ptr(nd.b);
            if (wants(nd.a)) {
                double* da = adj_ptr(nd.a);
                for (int k = 0; k < nd.n; ++k) da[k] += g[k] / pb[k];
            }
            if (wants(nd.b)) {
                double* db = adj_ptr(nd.b);
                for (int k = 0; k < nd.n; ++k) db[k] -= g[k] * y[k] / pb[k];
            }
            break;
        }
        case Op::Scale: {
            double* da = adj_ptr(nd.a);
            for (int k = 0; k < nd.n; ++k) da[k] += nd.k0 * g[k];
            break;
        }
        case Op::AddConst: {
            double* da = adj_ptr(nd.a);
            for (int k = 0; k < nd.n; ++k) da[k] += g[k];
            break;
        }
        case Op::LinComb2: {
            if (wants(nd.a)) {
                double* da = adj_ptr(nd.a);
                for (int k = 0; k < nd.n; ++k) da[k] += nd.k0 * g[k];
            }
            if (wants(nd.b)) {
                double* db = adj_ptr(nd.b);
                for (int k = 0; k < nd.n; ++k) db[k] += nd.k1 * g[k];
            }
            break;
        }
        case Op::MulAdd2: {
            const double* pa = val_ptr(nd.a);
            const double* pb = val_ptr(nd.b);
            const double* pc = val_ptr(nd.c);
            const double* pd = val_ptr(nd.d);
            if (wants(nd.a)) {
                double* da = adj_ptr(nd.a);
                for (int k = 0; k < nd.n; ++k) da[k] += g[k] * pb[k];
            }
            if (wants(nd.b)) {
                double* db = adj_ptr(nd.b);
                for (int k = 0; k < nd.n; ++k) db[k] += g[k] * pa[k];
            }
            if (wants(nd.c)) {
                double* dc = adj_ptr(nd.c);
                for (int k = 0; k < nd.n; ++k) dc[k] += g[k] * pd[k];
            }
            if (wants(nd.d)) {
                double* dd = adj_ptr(nd.d);
                for (int k = 0; k < nd.n; ++k) dd[k] += g[k] * pc[k];
            }
            break;
        }
        case Op::GruBlend: {
            const double* pu = val_ptr(nd.a);
            const double* ph = val_ptr(nd.b);
            const double* pt = val_ptr(nd.c);
            if (wants(nd.a)) {
                double* du = adj_ptr(nd.a);
                for (int k = 0; k < nd.n; ++k) du[k] += g[k] * (pt[k] - ph[k]);
            }
            if (wants(nd.b)) {
                double* dh = adj_ptr(nd.b);
                for (int k = 0; k < nd.n; ++k) dh[k] += g[k] * (1.0 - pu[k]);
            }
            if (wants(nd.c)) {
                double* dt = adj_ptr(nd.c);
                for (int k = 0; k < nd.n; ++k) dt[k] += g[k] * pu[k];
            }
            break;
        }
        case Op::Sigmoid: {
            double* da = adj_ptr(nd.a);
            for (int k = 0; k < nd.n; ++k) da[k] += g[k] * y[k] * (1.0 - y[k]);
            break;
        }
        case Op::Tanh: {
            double* da = adj_ptr(nd.a);
            for (int k = 0; k < nd.n; ++k) da[k] += g[k] * (1.0 - y[k] * y[k]);
            break;
        }
        case Op::Softmax: {
            double* da = adj_ptr(nd.a);
            double s = 0.0;
            for (int k = 0; k < nd.n; ++k) s += g[k] * y[k];
            for (int k = 0; k < nd.n; ++k) da[k] += y[k] * (g[k] - s);
            break;
        }
        case Op::Sqrt: {
            double* da = adj_ptr(nd.a);
            for (int k = 0; k < nd.n; ++k) da[k] += g[k] * 0.5 / y[k];
            break;
        }
        case Op::Log: {
            const double* pa = val_ptr(nd.a);
            double* da = adj_ptr(nd.a);
            for (int k = 0; k < nd.n; ++k)
                if (g[k] != 0.0) da[k] += g[k] / pa[k];
            break;
        }
        case Op::Exp: {
            double* da = adj_ptr(nd.a);
            for (int k = 0; k < nd.n; ++k) da[k] += g[k] * y[k];
            break;
        }
        case Op::Dot: {
            const double* pa = val_ptr(nd.a);
            const double* pb = val_ptr(nd.b);
            double g0 = g[0];
            int n = nodes_[nd.a].n;
            if (wants(nd.a)) {
                double* da = adj_ptr(nd.a);
                for (int k = 0; k < n; ++k) da[k] += g0 * pb[k];
            }
            if (wants(nd.b)) {
                double* db = adj_ptr(nd.b);
                for (int k = 0; k < n; ++k) db[k] += g0 * pa[k];
            }
            break;
        }
        case Op::SumSq: {
            const double* pa = val_ptr(nd.a);
            double* da = adj_ptr(nd.a);
            double g0 = 2.0 * g[0];
            int n = nodes_[nd.a].n;
            for (int k = 0; k < n; ++k) da[k] += g0 * pa[k];
            break;
        }
        case Op::Concat: {
            int pos = 0;
            for (int j = 0; j < nd.naux; ++j) {
                int p = parent_pool_[nd.aux + j];
                int pn = nodes_[p].n;
                if (wants(p)) {
                    double* dp = adj_ptr(p);
                    for (int k = 0; k < pn; ++k) dp[k] += g[pos + k];
                }
                pos += pn;
            }
            break;
        }
        case Op::Slice: {
            double* da = adj_ptr(nd.a) + nd.aux;
            for (int k = 0; k < nd.n; ++k) da[k] += g[k];
            break;
        }
        case Op::Leaf:
            break;
        }
    }
}

const double* Tape::param_grad(const double* storage) const {
    auto it = param_ids_.find(storage);
    if (it == param_ids_.end()) return nullptr;
    return adjs_.data() + nodes_[it->second].off;
}

void Tape::reset() {
    nodes_.clear();
    vals_.clear();
    adjs_.clear();
    parent_pool_.clear();
    param_ids_.clear();
}

double finite_diff_check(const std::function<int(Tape&)>& make_loss,
                         std::span<const ParamRef> params, double step) {
    Tape tape;
    int loss = make_loss(tape);
    tape.backward(loss);

    std::vector<Vec> analytic;
    analytic.reserve(params.size());
    for (const ParamRef& pr : params) {
        const double* g = tape.param_grad(pr.p);
        Vec gv(static_cast<std::size_t>(pr.n), 0.0);
        if (g) std::copy(g, g + pr.n, gv.begin());
        analytic.push_back(std::move(gv));
    }

    auto eval = [&](Tape& t) {
        t.reset();
        int l = make_loss(t);
        double v = t.scalar(l);
        if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite loss");
        return v;
    };

    Tape scratch;
    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const ParamRef& pr = params[pi];
        for (int k = 0; k < pr.n; ++k) {
            double saved = pr.p[k];
            pr.p[k] = saved + step;
            double up = eval(scratch);
            pr.p[k] = saved - step;
            double down = eval(scratch);
            pr.p[k] = saved;
            double fd = (up - down) / (2.0 * step);
            double an = analytic[pi][k];
            double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
            worst = std::max(worst, std::abs(fd - an) / denom);
        }
    }
    return worst;
}

} // namespace etnet
