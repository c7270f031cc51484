#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "core.hpp"

namespace ltpot {

inline double Accuracy(std::span<int const> predicted, std::span<int const> truth)
{
    if (predicted.size() != truth.size()) {
        throw Error(fmt::format("accuracy: {} predictions for {} labels", predicted.size(), truth.size()));
    }
    if (truth.empty()) { throw Error("accuracy: empty input"); }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) { hits += predicted[i] == truth[i] ? 1 : 0; }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// 1-based ranks; tied values share the average of their ranks.
inline std::vector<double> AverageRanks(std::span<double const> values)
{
    std::size_t const n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) { ++j; }
        double const avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) { ranks[order[t]] = avg; }
        i = j + 1;
    }
    return ranks;
}

// Probability that a random positive outranks a random negative, ties
// counting one half (Mann-Whitney U / (n+ n-)). Nonzero labels are positive.
inline double BinaryAuroc(std::span<double const> scores, std::span<int const> positive)
{
    if (scores.size() != positive.size()) { throw Error("auroc: scores and labels differ in length"); }
    auto const ranks = AverageRanks(scores);
    double rankSum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (positive[i] != 0) {
            rankSum += ranks[i];
            ++pos;
        }
    }
    std::size_t const neg = scores.size() - pos;
    if (pos == 0 || neg == 0) { throw Error("auroc: need both positive and negative instances"); }
    double const p = static_cast<double>(pos);
    return (rankSum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

// Multi-class AUROC from per-class probabilities: one-vs-rest binary AUROC
// averaged without weights over the classes present in `truth`. With two
// classes this is the AUROC of the class-1 column.
inline double Auroc(Matrix const& proba, std::span<int const> truth)
{
    if (proba.Rows() != truth.size()) { throw Error("auroc: probability rows and labels differ in length"); }
    std::vector<std::size_t> present(proba.Cols(), 0);
    for (int y : truth) { ++present.at(static_cast<std::size_t>(y)); }
    std::size_t const classesPresent = static_cast<std::size_t>(std::count_if(present.begin(), present.end(), [](auto c) { return c > 0; }));
    if (classesPresent < 2) { throw Error("auroc: truth contains a single class"); }

    std::vector<double> column(truth.size());
    std::vector<int> positive(truth.size());
    auto binary = [&](std::size_t c) {
        for (std::size_t i = 0; i < truth.size(); ++i) {
            column[i] = proba(i, c);
            positive[i] = static_cast<std::size_t>(truth[i]) == c ? 1 : 0;
        }
        return BinaryAuroc(column, positive);
    };
    if (proba.Cols() == 2) { return binary(1); }
    double sum = 0.0;
    for (std::size_t c = 0; c < proba.Cols(); ++c) {
        if (present[c] > 0) { sum += binary(c); }
    }
    return sum / static_cast<double>(classesPresent);
}

inline double Mean(std::span<double const> x)
{
    return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double PearsonCorrelation(std::span<double const> x, std::span<double const> y)
{
    double const mx = Mean(x);
    double const my = Mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) { throw Error("correlation: zero variance"); }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Two-sided p-value of a t statistic with `df` degrees of freedom.
inline double TwoSidedTPValue(double t, double df)
{
    if (std::isinf(t)) { return 0.0; }
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

struct SpearmanResult {
    double rho;
    double p;
};

// Spearman's rank correlation (average ranks for ties) with a two-sided p from
// t = rho * sqrt((n - 2) / (1 - rho^2)) on n - 2 degrees of freedom.
inline SpearmanResult SpearmanRho(std::span<double const> x, std::span<double const> y)
{
    if (x.size() != y.size()) { throw Error("spearman: inputs differ in length"); }
    if (x.size() < 3) { throw Error("spearman: need at least 3 observations"); }
    auto const rx = AverageRanks(x);
    auto const ry = AverageRanks(y);
    double const rho = PearsonCorrelation(rx, ry);
    double const n = static_cast<double>(x.size());
    double const t = std::fabs(rho) >= 1.0 ? std::numeric_limits<double>::infinity() : rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
    return { rho, TwoSidedTPValue(t, n - 2.0) };
}

struct TTestResult {
    double t;
    double p;
};

// Student's two-sample t-test with pooled variance, two-sided.
inline TTestResult StudentTTest(std::span<double const> a, std::span<double const> b)
{
    if (a.size() < 2 || b.size() < 2) { throw Error("t-test: need at least two observations per group"); }
    double const ma = Mean(a);
    double const mb = Mean(b);
    double ssa = 0.0;
    double ssb = 0.0;
    for (double v : a) { ssa += (v - ma) * (v - ma); }
    for (double v : b) { ssb += (v - mb) * (v - mb); }
    double const na = static_cast<double>(a.size());
    double const nb = static_cast<double>(b.size());
    double const df = na + nb - 2.0;
    double const pooled = (ssa + ssb) / df;
    double const se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    if (se == 0.0) {
        return { ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb), ma == mb ? 1.0 : 0.0 };
    }
    double const t = (ma - mb) / se;
    return { t, TwoSidedTPValue(t, df) };
}

} // namespace ltpot
