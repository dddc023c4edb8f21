#include "etnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace etnet {

double auc(std::span<const ScoredSample> samples) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const ScoredSample& s : samples) (s.label ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw UsageError("auc: need at least one sample of each class");

    std::vector<ScoredSample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });

    // Walk tie groups: each positive counts the negatives strictly below it
    // plus half the negatives tied with it.
    double u = 0.0;
    std::size_t neg_below = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        std::size_t tie_pos = 0, tie_neg = 0;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].label ? tie_pos : tie_neg) += 1;
            ++j;
        }
        u += static_cast<double>(tie_pos) *
             (static_cast<double>(neg_below) + 0.5 * static_cast<double>(tie_neg));
        neg_below += tie_neg;
        i = j;
    }
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

double entropy(const std::map<int, std::size_t>& counts, std::size_t n) {
    double h = 0.0;
    for (const auto& [label, c] : counts) {
        double p = static_cast<double>(c) / static_cast<double>(n);
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

} // namespace

double nmi(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw UsageError("nmi: partitions must have equal length");
    if (a.empty()) throw UsageError("nmi: empty partitions");
    std::size_t n = a.size();

    std::map<int, std::size_t> ca, cb;
    std::map<std::pair<int, int>, std::size_t> joint;
    for (std::size_t i = 0; i < n; ++i) {
        ca[a[i]] += 1;
        cb[b[i]] += 1;
        joint[{a[i], b[i]}] += 1;
    }

    double mi = 0.0;
    for (const auto& [ab, c] : joint) {
        double pab = static_cast<double>(c) / static_cast<double>(n);
        double pa = static_cast<double>(ca[ab.first]) / static_cast<double>(n);
        double pb = static_cast<double>(cb[ab.second]) / static_cast<double>(n);
        mi += pab * std::log(pab / (pa * pb));
    }

    double denom = 0.5 * (entropy(ca, n) + entropy(cb, n));
    if (denom <= 0.0) return 0.0;
    return std::max(0.0, mi / denom);
}

double ed(const Vec& x, const Vec& y) {
    if (x.empty() || y.empty()) throw UsageError("ed: empty input");
    if (x.size() != y.size()) throw UsageError("ed: inputs must have equal length");
    return std::sqrt(sum_sq_diff(x, y));
}

double dtw(const Vec& x, const Vec& y, int band) {
    if (x.empty() || y.empty()) throw UsageError("dtw: empty input");
    int n = static_cast<int>(x.size());
    int m = static_cast<int>(y.size());
    if (band >= 0 && band < std::abs(n - m))
        throw UsageError("dtw: band narrower than the length difference");

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(static_cast<std::size_t>(m) + 1, inf);
    std::vector<double> cur(static_cast<std::size_t>(m) + 1, inf);
    prev[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
        std::fill(cur.begin(), cur.end(), inf);
        int lo = 1, hi = m;
        if (band >= 0) {
            lo = std::max(1, i - band);
            hi = std::min(m, i + band);
        }
        for (int j = lo; j <= hi; ++j) {
            double cost = std::abs(x[static_cast<std::size_t>(i - 1)] -
                                   y[static_cast<std::size_t>(j - 1)]);
            double best = std::min({prev[static_cast<std::size_t>(j)],
                                    cur[static_cast<std::size_t>(j - 1)],
                                    prev[static_cast<std::size_t>(j - 1)]});
            cur[static_cast<std::size_t>(j)] = cost + best;
        }
        std::swap(prev, cur);
    }
    return prev[static_cast<std::size_t>(m)];
}

double edr(const Vec& x, const Vec& y, double eps) {
    if (x.empty() || y.empty()) throw UsageError("edr: empty input");
    if (eps < 0.0) throw UsageError("edr: eps must be >= 0");
    int n = static_cast<int>(x.size());
    int m = static_cast<int>(y.size());
    std::vector<double> prev(static_cast<std::size_t>(m) + 1);
    std::vector<double> cur(static_cast<std::size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) prev[static_cast<std::size_t>(j)] = j;
    for (int i = 1; i <= n; ++i) {
        cur[0] = i;
        for (int j = 1; j <= m; ++j) {
            bool match = std::abs(x[static_cast<std::size_t>(i - 1)] -
                                  y[static_cast<std::size_t>(j - 1)]) <= eps;
            double sub = prev[static_cast<std::size_t>(j - 1)] + (match ? 0.0 : 1.0);
            double del = prev[static_cast<std::size_t>(j)] + 1.0;
            double ins = cur[static_cast<std::size_t>(j - 1)] + 1.0;
            cur[static_cast<std::size_t>(j)] = std::min({sub, del, ins});
        }
        std::swap(prev, cur);
    }
    return prev[static_cast<std::size_t>(m)];
}

} // namespace etnet
