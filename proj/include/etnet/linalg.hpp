#pragma once

#include <cstddef>
#include <vector>

#include "etnet/error.hpp"
#include "etnet/rng.hpp"

namespace etnet {

using Vec = std::vector<double>;

// Dense row-major matrix. Small throughout: hidden sizes and latent
// dimensions stay below ~32, so no blocking or external BLAS.
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool operator==(const Matrix& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

// View over one trainable tensor's storage; used for Adam and gradient checks.
struct ParamRef {
    double* p = nullptr;
    int n = 0;
};

inline ParamRef param_ref(Matrix& m) { return {m.data.data(), static_cast<int>(m.data.size())}; }
inline ParamRef param_ref(Vec& v) { return {v.data(), static_cast<int>(v.size())}; }

Vec matvec(const Matrix& m, const Vec& v);

Vec sigmoid(const Vec& v);
Vec tanh_vec(const Vec& v);
// Max-subtracted for stability; output sums to 1.
Vec softmax(const Vec& v);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
double sum_sq_diff(const Vec& a, const Vec& b);

// Uniform init in [-1/sqrt(fanin), +1/sqrt(fanin)].
void init_uniform(Matrix& m, int fanin, Rng& rng);
void init_uniform(Vec& v, int fanin, Rng& rng);

// Lower-triangular Cholesky factor of a symmetric matrix.
// Returns false if the matrix is not positive definite.
bool cholesky(const Matrix& a, Matrix& lower);

// Inverse of a lower-triangular matrix (forward substitution per column).
Matrix invert_lower(const Matrix& lower);

} // namespace etnet
