#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "etnet/tape.hpp"

namespace etnet {

// Gate matrices operate on the concatenation [h_prev, x], so each weight is
// hidden x (hidden + input).
struct LstmCell {
    Matrix w_o, w_f, w_i, w_c;
    Vec b_o, b_f, b_i, b_c;

    int hidden() const { return w_o.rows; }
    int input() const { return w_o.cols - w_o.rows; }
    static LstmCell init(int hidden, int input, Rng& rng);
};

struct GruCell {
    Matrix w_u, w_h, w_r;
    Vec b_u, b_h, b_r;

    int hidden() const { return w_u.rows; }
    int input() const { return w_u.cols - w_u.rows; }
    static GruCell init(int hidden, int input, Rng& rng);
};

struct LstmState {
    int h = -1;
    int c = -1;
};

// One cell update on the tape. Node ids refer to vectors of length hidden
// (h, c) and length input (x).
LstmState lstm_step(Tape& tape, LstmCell& cell, int h_prev, int c_prev, int x_t);
int gru_step(Tape& tape, GruCell& cell, int h_prev, int x_t);

// Per-timestep skip gates, value in {1,0}, {0,1} or {1,1}. Derived
// counter-style from the seed so the schedule extends to any horizon while
// staying frozen after construction.
struct GateSchedule {
    std::uint64_t seed = 0;
    int forced = -1; // pin every step to one choice (0..2); -1 derives from seed

    std::pair<int, int> at(int t) const {
        std::uint64_t pick =
            forced >= 0 ? static_cast<std::uint64_t>(forced)
                        : mix_seed(seed, static_cast<std::uint64_t>(t)) % 3;
        switch (pick) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        default: return {1, 1};
        }
    }
};

// Recurrent layer mixing a cell path with a linear skip path over span s.
struct SrnnLayer {
    std::variant<LstmCell, GruCell> cell;
    int skip = 1; // s, at most 3
    Matrix w_skip; // linear map over [h(t-s), x]
    Vec b_skip;
    GateSchedule gates;

    int hidden() const;
    int input() const;
    static SrnnLayer init(int hidden, int input, int skip, std::uint64_t gate_seed, Rng& rng);
};

// Unrolled state of one SRNN layer. States for t < -1 are zero; t == -1 is
// the initial state (zero unless seeded with one, as decoders are).
struct SrnnHistory {
    std::vector<int> h;
    std::vector<int> c;
    int init_h = -1;
    int init_c = -1;
    int zero = -1;

    void start(Tape& tape, int hidden);
    int h_at(int t) const;
    int c_at(int t) const;
};

// Advances the layer by one step; t must be the next unrecorded index.
int srnn_step(Tape& tape, SrnnLayer& layer, SrnnHistory& history, int t, int x_t);

struct DilatedLayer {
    GruCell cell;
    int dilation = 1; // d, timesteps between connected states

    static DilatedLayer init(int hidden, int input, int dilation, Rng& rng);
};

struct DilatedHistory {
    std::vector<int> h;
    int init_h = -1; // used for all t - d < 0
    int zero = -1;

    void start(Tape& tape, int hidden);
    int h_at(int t, int dilation) const;
};

// h^i(t) = cell(h^i(t - d), lower(t)); the bottom layer's lower input is x(t).
int dilated_step(Tape& tape, DilatedLayer& layer, DilatedHistory& history, int t, int lower_t);

void collect_params(LstmCell& c, std::vector<ParamRef>& out);
void collect_params(GruCell& c, std::vector<ParamRef>& out);
void collect_params(SrnnLayer& l, std::vector<ParamRef>& out);
void collect_params(DilatedLayer& l, std::vector<ParamRef>& out);

} // namespace etnet
