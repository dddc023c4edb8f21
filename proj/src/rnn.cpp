#include "etnet/rnn.hpp"

namespace etnet {

LstmCell LstmCell::init(int hidden, int input, Rng& rng) {
    LstmCell c;
    int fanin = hidden + input;
    for (Matrix* m : {&c.w_o, &c.w_f, &c.w_i, &c.w_c}) {
        *m = Matrix(hidden, fanin);
        init_uniform(*m, fanin, rng);
    }
    for (Vec* b : {&c.b_o, &c.b_f, &c.b_i, &c.b_c}) {
        b->assign(static_cast<std::size_t>(hidden), 0.0);
        init_uniform(*b, fanin, rng);
    }
    return c;
}

GruCell GruCell::init(int hidden, int input, Rng& rng) {
    GruCell c;
    int fanin = hidden + input;
    for (Matrix* m : {&c.w_u, &c.w_h, &c.w_r}) {
        *m = Matrix(hidden, fanin);
        init_uniform(*m, fanin, rng);
    }
    for (Vec* b : {&c.b_u, &c.b_h, &c.b_r}) {
        b->assign(static_cast<std::size_t>(hidden), 0.0);
        init_uniform(*b, fanin, rng);
    }
    return c;
}

LstmState lstm_step(Tape& tape, LstmCell& cell, int h_prev, int c_prev, int x_t) {
    if (tape.size(h_prev) != cell.hidden() || tape.size(c_prev) != cell.hidden() ||
        tape.size(x_t) != cell.input())
        throw ShapeError("lstm_step: state/input dims inconsistent with cell");
    int hx = tape.concat2(h_prev, x_t);
    int o = tape.sigmoid(tape.affine(tape.param(cell.w_o), tape.param(cell.b_o), hx));
    int f = tape.sigmoid(tape.affine(tape.param(cell.w_f), tape.param(cell.b_f), hx));
    int i = tape.sigmoid(tape.affine(tape.param(cell.w_i), tape.param(cell.b_i), hx));
    int ctilde = tape.tanh(tape.affine(tape.param(cell.w_c), tape.param(cell.b_c), hx));
    int c = tape.muladd2(f, c_prev, i, ctilde);
    int h = tape.mul(o, c);
    return {h, c};
}

int gru_step(Tape& tape, GruCell& cell, int h_prev, int x_t) {
    if (tape.size(h_prev) != cell.hidden() || tape.size(x_t) != cell.input())
        throw ShapeError("gru_step: state/input dims inconsistent with cell");
    int hx = tape.concat2(h_prev, x_t);
    int u = tape.sigmoid(tape.affine(tape.param(cell.w_u), tape.param(cell.b_u), hx));
    int r = tape.sigmoid(tape.affine(tape.param(cell.w_r), tape.param(cell.b_r), hx));
    int rh = tape.mul(r, h_prev);
    int rhx = tape.concat2(rh, x_t);
    int htilde = tape.tanh(tape.affine(tape.param(cell.w_h), tape.param(cell.b_h), rhx));
    return tape.gru_blend(u, h_prev, htilde);
}

int SrnnLayer::hidden() const {
    return std::visit([](const auto& c) { return c.hidden(); }, cell);
}

int SrnnLayer::input() const {
    return std::visit([](const auto& c) { return c.input(); }, cell);
}

SrnnLayer SrnnLayer::init(int hidden, int input, int skip, std::uint64_t gate_seed, Rng& rng) {
    if (skip < 1 || skip > 3) throw UsageError("SrnnLayer: skip must be in [1, 3]");
    SrnnLayer l;
    l.cell = LstmCell::init(hidden, input, rng);
    l.skip = skip;
    int fanin = hidden + input;
    l.w_skip = Matrix(hidden, fanin);
    init_uniform(l.w_skip, fanin, rng);
    l.b_skip.assign(static_cast<std::size_t>(hidden), 0.0);
    init_uniform(l.b_skip, fanin, rng);
    l.gates.seed = gate_seed;
    return l;
}

void SrnnHistory::start(Tape& tape, int hidden) {
    Vec zeros(static_cast<std::size_t>(hidden), 0.0);
    zero = tape.constant(zeros);
    h.clear();
    c.clear();
}

int SrnnHistory::h_at(int t) const {
    if (t >= 0) return h[static_cast<std::size_t>(t)];
    if (t == -1 && init_h >= 0) return init_h;
    return zero;
}

int SrnnHistory::c_at(int t) const {
    if (t >= 0) return c[static_cast<std::size_t>(t)];
    if (t == -1 && init_c >= 0) return init_c;
    return zero;
}

int srnn_step(Tape& tape, SrnnLayer& layer, SrnnHistory& history, int t, int x_t) {
    if (history.zero < 0) throw UsageError("srnn_step: history not started");
    if (t != static_cast<int>(history.h.size()))
        throw UsageError("srnn_step: timestep " + std::to_string(t) +
                         " out of order (next is " + std::to_string(history.h.size()) + ")");
    auto [w1, w2] = layer.gates.at(t);
    if (w1 + w2 < 1) throw NumericError("srnn_step: gate constraint w1+w2 >= 1 violated");

    int h_cell = -1;
    int c_new = history.c_at(t - 1);
    if (w1 == 1) {
        if (auto* lstm = std::get_if<LstmCell>(&layer.cell)) {
            LstmState s = lstm_step(tape, *lstm, history.h_at(t - 1), history.c_at(t - 1), x_t);
            h_cell = s.h;
            c_new = s.c;
        } else {
            h_cell = gru_step(tape, std::get<GruCell>(layer.cell), history.h_at(t - 1), x_t);
        }
    }
    int h_skip = -1;
    if (w2 == 1) {
        int hs_x = tape.concat2(history.h_at(t - layer.skip), x_t);
        h_skip = tape.affine(tape.param(layer.w_skip), tape.param(layer.b_skip), hs_x);
    }

    int h;
    if (w1 == 1 && w2 == 1)
        h = tape.lincomb2(h_cell, h_skip, 0.5, 0.5);
    else
        h = (w1 == 1) ? h_cell : h_skip;

    history.h.push_back(h);
    history.c.push_back(c_new);
    return h;
}

DilatedLayer DilatedLayer::init(int hidden, int input, int dilation, Rng& rng) {
    if (dilation < 1) throw UsageError("DilatedLayer: dilation must be >= 1");
    DilatedLayer l;
    l.cell = GruCell::init(hidden, input, rng);
    l.dilation = dilation;
    return l;
}

void DilatedHistory::start(Tape& tape, int hidden) {
    Vec zeros(static_cast<std::size_t>(hidden), 0.0);
    zero = tape.constant(zeros);
    h.clear();
}

int DilatedHistory::h_at(int t, int) const {
    if (t >= 0) return h[static_cast<std::size_t>(t)];
    return init_h >= 0 ? init_h : zero;
}

int dilated_step(Tape& tape, DilatedLayer& layer, DilatedHistory& history, int t, int lower_t) {
    if (history.zero < 0) throw UsageError("dilated_step: history not started");
    if (t != static_cast<int>(history.h.size()))
        throw UsageError("dilated_step: timestep out of order");
    int h_prev = history.h_at(t - layer.dilation, layer.dilation);
    int h = gru_step(tape, layer.cell, h_prev, lower_t);
    history.h.push_back(h);
    return h;
}

void collect_params(LstmCell& c, std::vector<ParamRef>& out) {
    for (Matrix* m : {&c.w_o, &c.w_f, &c.w_i, &c.w_c}) out.push_back(param_ref(*m));
    for (Vec* b : {&c.b_o, &c.b_f, &c.b_i, &c.b_c}) out.push_back(param_ref(*b));
}

void collect_params(GruCell& c, std::vector<ParamRef>& out) {
    for (Matrix* m : {&c.w_u, &c.w_h, &c.w_r}) out.push_back(param_ref(*m));
    for (Vec* b : {&c.b_u, &c.b_h, &c.b_r}) out.push_back(param_ref(*b));
}

void collect_params(SrnnLayer& l, std::vector<ParamRef>& out) {
    std::visit([&](auto& c) { collect_params(c, out); }, l.cell);
    out.push_back(param_ref(l.w_skip));
    out.push_back(param_ref(l.b_skip));
}

void collect_params(DilatedLayer& l, std::vector<ParamRef>& out) {
    collect_params(l.cell, out);
}

} // namespace etnet
