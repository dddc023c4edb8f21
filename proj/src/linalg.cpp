#include "etnet/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace etnet {

Vec matvec(const Matrix& m, const Vec& v) {
    if (m.cols != static_cast<int>(v.size()))
        throw ShapeError("matvec: matrix is " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols) + " but vector has length " +
                         std::to_string(v.size()));
    Vec out(static_cast<std::size_t>(m.rows), 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        double acc = 0.0;
        for (int c = 0; c < m.cols; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

Vec sigmoid(const Vec& v) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-v[i]));
    return out;
}

Vec tanh_vec(const Vec& v) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
    return out;
}

Vec softmax(const Vec& v) {
    Vec out(v.size());
    double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

double sum_sq_diff(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("sum_sq_diff: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void init_uniform(Matrix& m, int fanin, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fanin));
    for (double& x : m.data) x = rng.uniform(-bound, bound);
}

void init_uniform(Vec& v, int fanin, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fanin));
    for (double& x : v) x = rng.uniform(-bound, bound);
}

bool cholesky(const Matrix& a, Matrix& lower) {
    if (a.rows != a.cols) throw ShapeError("cholesky: matrix not square");
    int n = a.rows;
    lower = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = a(i, j);
            for (int k = 0; k < j; ++k) sum -= lower(i, k) * lower(j, k);
            if (i == j) {
                if (sum <= 0.0 || !std::isfinite(sum)) return false;
                lower(i, i) = std::sqrt(sum);
            } else {
                lower(i, j) = sum / lower(j, j);
            }
        }
    }
    return true;
}

Matrix invert_lower(const Matrix& lower) {
    int n = lower.rows;
    Matrix inv(n, n);
    for (int col = 0; col < n; ++col) {
        inv(col, col) = 1.0 / lower(col, col);
        for (int i = col + 1; i < n; ++i) {
            double sum = 0.0;
            for (int k = col; k < i; ++k) sum += lower(i, k) * inv(k, col);
            inv(i, col) = -sum / lower(i, i);
        }
    }
    return inv;
}

} // namespace etnet
