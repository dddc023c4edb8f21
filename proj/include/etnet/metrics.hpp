#pragma once

#include <span>
#include <vector>

#include "etnet/linalg.hpp"

namespace etnet {

struct ScoredSample {
    double score = 0.0;
    int label = 0; // 1 = anomaly
};

// Rank-based (Mann-Whitney) AUC; ties contribute 0.5. Both classes required.
double auc(std::span<const ScoredSample> samples);

// Mutual information normalized by the arithmetic mean of the entropies;
// 0/0 is defined as 0.
double nmi(std::span<const int> a, std::span<const int> b);

// Euclidean (L2) distance; equal lengths required.
double ed(const Vec& x, const Vec& y);

// Dynamic time warping with absolute-difference local cost; band >= 0 applies
// a Sakoe-Chiba constraint and must be at least |len(x) - len(y)|.
double dtw(const Vec& x, const Vec& y, int band = -1);

// Edit distance on real sequences: unit-cost insert/delete/mismatch, samples
// match iff |x_i - y_j| <= eps.
double edr(const Vec& x, const Vec& y, double eps);

} // namespace etnet
