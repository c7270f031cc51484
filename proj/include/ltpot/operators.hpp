#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "core.hpp"

namespace ltpot {

// A data transform fit on training rows and then applied to any rows.
class Preprocessor {
public:
    virtual ~Preprocessor() = default;
    virtual void Fit(Matrix const& x, Deadline const& deadline) = 0;
    [[nodiscard]] virtual Matrix Transform(Matrix const& x) const = 0;
};

// A probabilistic classifier. PredictProba returns one row per instance and
// one column per class in [0, classes); every row sums to one.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual void Fit(Matrix const& x, std::span<int const> y, int classes, Deadline const& deadline) = 0;
    [[nodiscard]] virtual Matrix PredictProba(Matrix const& x, Deadline const& deadline) const = 0;
};

namespace detail {
    inline std::vector<double> ColumnMeans(Matrix const& x)
    {
        std::vector<double> mean(x.Cols(), 0.0);
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto row = x.Row(r);
            for (std::size_t c = 0; c < x.Cols(); ++c) { mean[c] += row[c]; }
        }
        for (auto& m : mean) { m /= static_cast<double>(std::max<std::size_t>(1, x.Rows())); }
        return mean;
    }

    // Population variance per column.
    inline std::vector<double> ColumnVariances(Matrix const& x, std::vector<double> const& mean)
    {
        std::vector<double> var(x.Cols(), 0.0);
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto row = x.Row(r);
            for (std::size_t c = 0; c < x.Cols(); ++c) {
                double d = row[c] - mean[c];
                var[c] += d * d;
            }
        }
        for (auto& v : var) { v /= static_cast<double>(std::max<std::size_t>(1, x.Rows())); }
        return var;
    }

    // In-place softmax over a row of log-scores.
    inline void SoftmaxRow(std::span<double> row)
    {
        double const hi = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (auto& v : row) {
            v = std::isfinite(v) ? std::exp(v - hi) : 0.0;
            sum += v;
        }
        for (auto& v : row) { v /= sum; }
    }

    inline std::vector<std::size_t> ClassCounts(std::span<int const> y, int classes)
    {
        std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
        for (int label : y) { ++counts[static_cast<std::size_t>(label)]; }
        return counts;
    }
} // namespace detail

class StandardScaler final : public Preprocessor {
public:
    void Fit(Matrix const& x, Deadline const& /*deadline*/) override
    {
        mean_ = detail::ColumnMeans(x);
        scale_ = detail::ColumnVariances(x, mean_);
        for (auto& s : scale_) { s = s > 0.0 ? std::sqrt(s) : 1.0; }
    }

    [[nodiscard]] Matrix Transform(Matrix const& x) const override
    {
        Matrix out = x;
        for (std::size_t r = 0; r < out.Rows(); ++r) {
            auto row = out.Row(r);
            for (std::size_t c = 0; c < out.Cols(); ++c) { row[c] = (row[c] - mean_[c]) / scale_[c]; }
        }
        return out;
    }

    [[nodiscard]] std::vector<double> const& Mean() const { return mean_; }
    [[nodiscard]] std::vector<double> const& Scale() const { return scale_; }

private:
    std::vector<double> mean_;
    std::vector<double> scale_;
};

class MinMaxScaler final : public Preprocessor {
public:
    void Fit(Matrix const& x, Deadline const& /*deadline*/) override
    {
        lo_.assign(x.Cols(), std::numeric_limits<double>::infinity());
        std::vector<double> hi(x.Cols(), -std::numeric_limits<double>::infinity());
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto row = x.Row(r);
            for (std::size_t c = 0; c < x.Cols(); ++c) {
                lo_[c] = std::min(lo_[c], row[c]);
                hi[c] = std::max(hi[c], row[c]);
            }
        }
        range_.resize(x.Cols());
        for (std::size_t c = 0; c < x.Cols(); ++c) {
            double const span = hi[c] - lo_[c];
            range_[c] = span > 0.0 ? span : 1.0;
        }
    }

    [[nodiscard]] Matrix Transform(Matrix const& x) const override
    {
        Matrix out = x;
        for (std::size_t r = 0; r < out.Rows(); ++r) {
            auto row = out.Row(r);
            for (std::size_t c = 0; c < out.Cols(); ++c) { row[c] = (row[c] - lo_[c]) / range_[c]; }
        }
        return out;
    }

private:
    std::vector<double> lo_;
    std::vector<double> range_;
};

// Drops columns whose training variance does not exceed the threshold.
class VarianceThreshold final : public Preprocessor {
public:
    explicit VarianceThreshold(double threshold)
        : threshold_(threshold)
    {
    }

    void Fit(Matrix const& x, Deadline const& /*deadline*/) override
    {
        auto const var = detail::ColumnVariances(x, detail::ColumnMeans(x));
        keep_.clear();
        for (std::size_t c = 0; c < var.size(); ++c) {
            if (var[c] > threshold_) { keep_.push_back(c); }
        }
        if (keep_.empty()) {
            throw DataError("no feature meets the variance threshold");
        }
    }

    [[nodiscard]] Matrix Transform(Matrix const& x) const override { return x.SelectCols(keep_); }

    [[nodiscard]] std::vector<std::size_t> const& Kept() const { return keep_; }

private:
    double threshold_;
    std::vector<std::size_t> keep_;
};

class Binarizer final : public Preprocessor {
public:
    explicit Binarizer(double threshold)
        : threshold_(threshold)
    {
    }

    void Fit(Matrix const& /*x*/, Deadline const& /*deadline*/) override { }

    [[nodiscard]] Matrix Transform(Matrix const& x) const override
    {
        Matrix out = x;
        for (auto& v : out.Data()) { v = v > threshold_ ? 1.0 : 0.0; }
        return out;
    }

private:
    double threshold_;
};

class GaussianNB final : public Classifier {
public:
    void Fit(Matrix const& x, std::span<int const> y, int classes, Deadline const& /*deadline*/) override
    {
        classes_ = classes;
        auto const counts = detail::ClassCounts(y, classes);
        std::size_t const k = static_cast<std::size_t>(classes);
        std::size_t const f = x.Cols();
        mean_.assign(k * f, 0.0);
        var_.assign(k * f, 0.0);
        logPrior_.assign(k, -std::numeric_limits<double>::infinity());

        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto const c = static_cast<std::size_t>(y[r]);
            auto row = x.Row(r);
            for (std::size_t j = 0; j < f; ++j) { mean_[c * f + j] += row[j]; }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) { continue; }
            for (std::size_t j = 0; j < f; ++j) { mean_[c * f + j] /= static_cast<double>(counts[c]); }
            logPrior_[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(x.Rows()));
        }
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto const c = static_cast<std::size_t>(y[r]);
            auto row = x.Row(r);
            for (std::size_t j = 0; j < f; ++j) {
                double d = row[j] - mean_[c * f + j];
                var_[c * f + j] += d * d;
            }
        }
        auto const overall = detail::ColumnVariances(x, detail::ColumnMeans(x));
        double epsilon = 1e-9 * (overall.empty() ? 0.0 : *std::max_element(overall.begin(), overall.end()));
        if (epsilon <= 0.0) { epsilon = 1e-9; }
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < f; ++j) {
                auto& v = var_[c * f + j];
                v = (counts[c] > 0 ? v / static_cast<double>(counts[c]) : 0.0) + epsilon;
            }
        }
    }

    [[nodiscard]] Matrix PredictProba(Matrix const& x, Deadline const& /*deadline*/) const override
    {
        std::size_t const k = static_cast<std::size_t>(classes_);
        std::size_t const f = x.Cols();
        Matrix out(x.Rows(), k);
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto row = x.Row(r);
            auto scores = out.Row(r);
            for (std::size_t c = 0; c < k; ++c) {
                if (!std::isfinite(logPrior_[c])) {
                    scores[c] = -std::numeric_limits<double>::infinity();
                    continue;
                }
                double ll = logPrior_[c];
                for (std::size_t j = 0; j < f; ++j) {
                    double const v = var_[c * f + j];
                    double const d = row[j] - mean_[c * f + j];
                    ll -= 0.5 * (std::log(2.0 * std::numbers::pi * v) + d * d / v);
                }
                scores[c] = ll;
            }
            detail::SoftmaxRow(scores);
        }
        return out;
    }

private:
    int classes_ { 0 };
    std::vector<double> mean_;
    std::vector<double> var_;
    std::vector<double> logPrior_;
};

class BernoulliNB final : public Classifier {
public:
    BernoulliNB(double alpha, double binarize)
        : alpha_(alpha)
        , binarize_(binarize)
    {
    }

    void Fit(Matrix const& x, std::span<int const> y, int classes, Deadline const& /*deadline*/) override
    {
        classes_ = classes;
        std::size_t const k = static_cast<std::size_t>(classes);
        std::size_t const f = x.Cols();
        auto const counts = detail::ClassCounts(y, classes);
        std::vector<double> ones(k * f, 0.0);
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto const c = static_cast<std::size_t>(y[r]);
            auto row = x.Row(r);
            for (std::size_t j = 0; j < f; ++j) {
                if (row[j] > binarize_) { ones[c * f + j] += 1.0; }
            }
        }
        logP_.assign(k * f, 0.0);
        log1mP_.assign(k * f, 0.0);
        logPrior_.assign(k, -std::numeric_limits<double>::infinity());
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) { continue; }
            logPrior_[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(x.Rows()));
            for (std::size_t j = 0; j < f; ++j) {
                double const p = (ones[c * f + j] + alpha_) / (static_cast<double>(counts[c]) + 2.0 * alpha_);
                logP_[c * f + j] = std::log(p);
                log1mP_[c * f + j] = std::log1p(-p);
            }
        }
    }

    [[nodiscard]] Matrix PredictProba(Matrix const& x, Deadline const& /*deadline*/) const override
    {
        std::size_t const k = static_cast<std::size_t>(classes_);
        std::size_t const f = x.Cols();
        Matrix out(x.Rows(), k);
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto row = x.Row(r);
            auto scores = out.Row(r);
            for (std::size_t c = 0; c < k; ++c) {
                double ll = logPrior_[c];
                if (std::isfinite(ll)) {
                    for (std::size_t j = 0; j < f; ++j) {
                        ll += row[j] > binarize_ ? logP_[c * f + j] : log1mP_[c * f + j];
                    }
                }
                scores[c] = ll;
            }
            detail::SoftmaxRow(scores);
        }
        return out;
    }

private:
    double alpha_;
    double binarize_;
    int classes_ { 0 };
    std::vector<double> logP_;
    std::vector<double> log1mP_;
    std::vector<double> logPrior_;
};

// CART with Gini impurity. Leaves predict their training class frequencies.
class DecisionTree final : public Classifier {
public:
    DecisionTree(std::size_t maxDepth, std::size_t minSamplesSplit)
        : maxDepth_(maxDepth)
        , minSamplesSplit_(std::max<std::size_t>(2, minSamplesSplit))
    {
    }

    void Fit(Matrix const& x, std::span<int const> y, int classes, Deadline const& deadline) override
    {
        classes_ = classes;
        nodes_.clear();
        leafProba_.clear();
        std::vector<std::size_t> rows(x.Rows());
        std::iota(rows.begin(), rows.end(), 0);
        Grow(x, y, rows, 0, deadline);
    }

    [[nodiscard]] Matrix PredictProba(Matrix const& x, Deadline const& /*deadline*/) const override
    {
        std::size_t const k = static_cast<std::size_t>(classes_);
        Matrix out(x.Rows(), k);
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            auto row = x.Row(r);
            std::size_t n = 0;
            while (nodes_[n].feature != kLeaf) {
                n = row[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
            }
            std::copy_n(leafProba_.begin() + static_cast<std::ptrdiff_t>(nodes_[n].left * k), k, out.Row(r).begin());
        }
        return out;
    }

    [[nodiscard]] std::size_t Depth() const { return depth_; }

private:
    static constexpr std::size_t kLeaf = std::numeric_limits<std::size_t>::max();

    struct Node {
        std::size_t feature { kLeaf };
        double threshold { 0.0 };
        std::size_t left { 0 }; // leaf: offset into leafProba_ (in units of classes)
        std::size_t right { 0 };
    };

    static double Gini(std::vector<double> const& counts, double total)
    {
        if (total <= 0.0) { return 0.0; }
        double s = 0.0;
        for (double c : counts) { s += c * c; }
        return 1.0 - s / (total * total);
    }

    std::size_t Grow(Matrix const& x, std::span<int const> y, std::vector<std::size_t>& rows, std::size_t depth, Deadline const& deadline)
    {
        deadline.Check();
        depth_ = std::max(depth_, depth);
        std::size_t const k = static_cast<std::size_t>(classes_);
        std::vector<double> counts(k, 0.0);
        for (auto r : rows) { counts[static_cast<std::size_t>(y[r])] += 1.0; }
        double const total = static_cast<double>(rows.size());
        double const parentGini = Gini(counts, total);

        std::size_t const id = nodes_.size();
        nodes_.emplace_back();

        auto makeLeaf = [&] {
            nodes_[id].feature = kLeaf;
            nodes_[id].left = leafProba_.size() / k;
            for (double c : counts) { leafProba_.push_back(c / total); }
            return id;
        };

        if (depth >= maxDepth_ || rows.size() < minSamplesSplit_ || parentGini <= 0.0) {
            return makeLeaf();
        }

        double bestImpurity = parentGini;
        std::size_t bestFeature = kLeaf;
        double bestThreshold = 0.0;
        std::vector<std::pair<double, int>> column(rows.size());
        std::vector<double> leftCounts(k);
        for (std::size_t f = 0; f < x.Cols(); ++f) {
            deadline.Check();
            for (std::size_t i = 0; i < rows.size(); ++i) { column[i] = { x(rows[i], f), y[rows[i]] }; }
            std::sort(column.begin(), column.end());
            std::fill(leftCounts.begin(), leftCounts.end(), 0.0);
            std::vector<double> rightCounts = counts;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                auto const c = static_cast<std::size_t>(column[i].second);
                leftCounts[c] += 1.0;
                rightCounts[c] -= 1.0;
                if (column[i].first == column[i + 1].first) { continue; }
                double const nl = static_cast<double>(i + 1);
                double const nr = total - nl;
                double const impurity = (nl * Gini(leftCounts, nl) + nr * Gini(rightCounts, nr)) / total;
                if (impurity < bestImpurity - 1e-12) {
                    bestImpurity = impurity;
                    bestFeature = f;
                    bestThreshold = 0.5 * (column[i].first + column[i + 1].first);
                }
            }
        }
        if (bestFeature == kLeaf) { return makeLeaf(); }

        std::vector<std::size_t> leftRows;
        std::vector<std::size_t> rightRows;
        for (auto r : rows) {
            (x(r, bestFeature) <= bestThreshold ? leftRows : rightRows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        nodes_[id].feature = bestFeature;
        nodes_[id].threshold = bestThreshold;
        std::size_t const l = Grow(x, y, leftRows, depth + 1, deadline);
        std::size_t const r = Grow(x, y, rightRows, depth + 1, deadline);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    std::size_t maxDepth_;
    std::size_t minSamplesSplit_;
    int classes_ { 0 };
    std::size_t depth_ { 0 };
    std::vector<Node> nodes_;
    std::vector<double> leafProba_;
};

// Brute-force k nearest neighbours under Euclidean distance.
class KNearestNeighbors final : public Classifier {
public:
    enum class Weighting { Uniform, Distance };

    KNearestNeighbors(std::size_t k, Weighting weighting)
        : k_(std::max<std::size_t>(1, k))
        , weighting_(weighting)
    {
    }

    void Fit(Matrix const& x, std::span<int const> y, int classes, Deadline const& /*deadline*/) override
    {
        train_ = x;
        labels_.assign(y.begin(), y.end());
        classes_ = classes;
    }

    [[nodiscard]] Matrix PredictProba(Matrix const& x, Deadline const& deadline) const override
    {
        std::size_t const kc = static_cast<std::size_t>(classes_);
        std::size_t const n = train_.Rows();
        std::size_t const k = std::min(k_, n);
        Matrix out(x.Rows(), kc);
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t r = 0; r < x.Rows(); ++r) {
            if (r % 16 == 0) { deadline.Check(); }
            auto query = x.Row(r);
            for (std::size_t t = 0; t < n; ++t) {
                auto row = train_.Row(t);
                double d = 0.0;
                for (std::size_t j = 0; j < row.size(); ++j) {
                    double const diff = row[j] - query[j];
                    d += diff * diff;
                }
                dist[t] = { d, t };
            }
            std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
            auto votes = out.Row(r);
            bool const exact = weighting_ == Weighting::Distance
                && std::any_of(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), [](auto const& p) { return p.first == 0.0; });
            double total = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                double w = 1.0;
                if (weighting_ == Weighting::Distance) {
                    if (exact) {
                        w = dist[i].first == 0.0 ? 1.0 : 0.0;
                    } else {
                        w = 1.0 / std::sqrt(dist[i].first);
                    }
                }
                votes[static_cast<std::size_t>(labels_[dist[i].second])] += w;
                total += w;
            }
            for (auto& v : votes) { v /= total; }
        }
        return out;
    }

private:
    std::size_t k_;
    Weighting weighting_;
    Matrix train_;
    std::vector<int> labels_;
    int classes_ { 0 };
};

// Multinomial logistic regression with an L2 penalty, fit by full-batch
// gradient descent on internally standardized features. The objective is
// mean cross-entropy + l2 / (2n) * ||W||^2 (bias unpenalized).
class LogisticRegression final : public Classifier {
public:
    LogisticRegression(double l2, std::size_t iterations)
        : l2_(l2)
        , iterations_(iterations)
    {
    }

    void Fit(Matrix const& x, std::span<int const> y, int classes, Deadline const& deadline) override
    {
        classes_ = classes;
        scaler_.Fit(x, deadline);
        Matrix const z = scaler_.Transform(x);
        std::size_t const n = z.Rows();
        std::size_t const f = z.Cols();
        std::size_t const k = static_cast<std::size_t>(classes);
        std::size_t const stride = f + 1;
        weights_.assign(k * stride, 0.0);

        double meanSq = 0.0;
        for (double v : z.Data()) { meanSq += v * v; }
        meanSq = meanSq / static_cast<double>(n) + 1.0;
        double const lambda = l2_ / static_cast<double>(n);
        double const step = 1.0 / (0.5 * meanSq + lambda);

        std::vector<double> grad(weights_.size());
        std::vector<double> proba(k);
        for (std::size_t it = 0; it < iterations_; ++it) {
            deadline.Check();
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t r = 0; r < n; ++r) {
                auto row = z.Row(r);
                Scores(row, proba);
                detail::SoftmaxRow(proba);
                proba[static_cast<std::size_t>(y[r])] -= 1.0;
                for (std::size_t c = 0; c < k; ++c) {
                    double const e = proba[c];
                    double* g = grad.data() + c * stride;
                    for (std::size_t j = 0; j < f; ++j) { g[j] += e * row[j]; }
                    g[f] += e;
                }
            }
            for (std::size_t c = 0; c < k; ++c) {
                for (std::size_t j = 0; j < stride; ++j) {
                    double const penalty = j < f ? lambda * weights_[c * stride + j] : 0.0;
                    weights_[c * stride + j] -= step * (grad[c * stride + j] / static_cast<double>(n) + penalty);
                }
            }
        }
    }

    [[nodiscard]] Matrix PredictProba(Matrix const& x, Deadline const& /*deadline*/) const override
    {
        Matrix const z = scaler_.Transform(x);
        std::size_t const k = static_cast<std::size_t>(classes_);
        Matrix out(z.Rows(), k);
        std::vector<double> proba(k);
        for (std::size_t r = 0; r < z.Rows(); ++r) {
            Scores(z.Row(r), proba);
            detail::SoftmaxRow(proba);
            std::copy(proba.begin(), proba.end(), out.Row(r).begin());
        }
        return out;
    }

private:
    void Scores(std::span<double const> row, std::vector<double>& out) const
    {
        std::size_t const f = row.size();
        std::size_t const stride = f + 1;
        for (std::size_t c = 0; c < out.size(); ++c) {
            double const* w = weights_.data() + c * stride;
            double s = w[f];
            for (std::size_t j = 0; j < f; ++j) { s += w[j] * row[j]; }
            out[c] = s;
        }
    }

    double l2_;
    std::size_t iterations_;
    int classes_ { 0 };
    StandardScaler scaler_;
    std::vector<double> weights_;
};

} // namespace ltpot
