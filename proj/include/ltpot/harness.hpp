#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "core.hpp"
#include "dataset.hpp"
#include "evaluate.hpp"
#include "genetic_ops.hpp"
#include "metrics.hpp"
#include "registry.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace ltpot {

enum class TimeAxis { Minutes, Generations };

inline char const* AxisColumn(TimeAxis axis)
{
    return axis == TimeAxis::Minutes ? "time_min" : "generation";
}

struct StepPoint {
    double time;
    double value;
};

// Running maximum of internal AUROC over successful evaluations on the full
// dataset, as the points where it improves. Time is minutes since the run
// started, or the generation index.
inline std::vector<StepPoint> BestSoFar(RunTrace const& trace, TimeAxis axis = TimeAxis::Minutes)
{
    if (axis == TimeAxis::Minutes && !trace.HasTiming()) {
        throw DataError(fmt::format("trace for {} seed {} has no timing fields", trace.Header().method, trace.Header().seed));
    }
    std::vector<StepPoint> out;
    for (auto const& r : trace.Evaluations()) {
        if (r.outcome != Outcome::Ok || !r.auroc || r.sampleSize != trace.Header().instances) { continue; }
        double const t = axis == TimeAxis::Minutes ? *r.elapsedMs / 60000.0 : static_cast<double>(r.generation);
        if (out.empty() || *r.auroc > out.back().value) {
            if (!out.empty() && out.back().time == t) {
                out.back().value = *r.auroc;
            } else {
                out.push_back({ t, *r.auroc });
            }
        }
    }
    return out;
}

// Last time covered by the trace on the given axis.
inline double TraceEnd(RunTrace const& trace, TimeAxis axis)
{
    double end = 0.0;
    for (auto const& r : trace.Evaluations()) {
        double const t = axis == TimeAxis::Minutes ? r.elapsedMs.value_or(0.0) / 60000.0 : static_cast<double>(r.generation);
        end = std::max(end, t);
    }
    return end;
}

inline std::optional<double> ValueAt(std::span<StepPoint const> series, double t)
{
    std::optional<double> v;
    for (auto const& p : series) {
        if (p.time > t) { break; }
        v = p.value;
    }
    return v;
}

// Ranks (1 = best) of the given scores, higher being better. Sorted scores
// whose neighbours differ by less than tau form one tie group (the transitive
// closure of the pairwise relation) sharing the average of its positions.
// Missing scores rank below every present one and tie among themselves.
inline std::vector<double> TieRanks(std::span<std::optional<double> const> scores, double tau)
{
    std::size_t const n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (scores[a].has_value() != scores[b].has_value()) { return scores[a].has_value(); }
        return scores[a] && *scores[a] > *scores[b];
    });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n) {
            auto const& cur = scores[order[j]];
            auto const& nxt = scores[order[j + 1]];
            bool const tie = cur && nxt ? *cur - *nxt < tau : !cur && !nxt;
            if (!tie) { break; }
            ++j;
        }
        double const avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) { ranks[order[t]] = avg; }
        i = j + 1;
    }
    return ranks;
}

struct LabeledTrace {
    std::string method;
    std::string dataset;
    std::uint64_t seed;
    RunTrace const* trace;
};

inline std::vector<LabeledTrace> LabelTraces(std::span<RunTrace const> traces)
{
    std::vector<LabeledTrace> out;
    for (auto const& t : traces) { out.push_back({ t.Header().method, t.Header().dataset, t.Header().seed, &t }); }
    return out;
}

struct RankSeries {
    TimeAxis axis { TimeAxis::Minutes };
    double tau { 0.1 };
    std::vector<std::string> methods;  // sorted
    std::vector<double> times;
    std::vector<std::vector<double>> avgRank; // [time][method]
};

// Average rank of each method over the (dataset, seed) grid, sampled at
// multiples of `interval` up to the longest trace.
inline RankSeries RankOverTime(std::span<LabeledTrace const> traces, double tau, double interval, TimeAxis axis = TimeAxis::Minutes)
{
    if (traces.empty()) { throw DataError("rank: no traces"); }
    if (!(interval > 0.0)) { throw ConfigError("rank: interval must be positive"); }
    std::set<std::string> methodSet;
    std::set<std::pair<std::string, std::uint64_t>> cells;
    std::map<std::tuple<std::string, std::string, std::uint64_t>, std::vector<StepPoint>> series;
    double horizon = 0.0;
    for (auto const& t : traces) {
        methodSet.insert(t.method);
        cells.emplace(t.dataset, t.seed);
        auto [it, inserted] = series.emplace(std::make_tuple(t.method, t.dataset, t.seed), BestSoFar(*t.trace, axis));
        if (!inserted) { throw DataError(fmt::format("rank: duplicate trace for {} on {} seed {}", t.method, t.dataset, t.seed)); }
        horizon = std::max(horizon, TraceEnd(*t.trace, axis));
    }
    RankSeries out { axis, tau, { methodSet.begin(), methodSet.end() }, {}, {} };
    for (auto const& m : out.methods) {
        for (auto const& [d, s] : cells) {
            if (!series.contains({ m, d, s })) { throw DataError(fmt::format("rank: missing trace for {} on {} seed {}", m, d, s)); }
        }
    }
    auto const steps = static_cast<std::size_t>(std::ceil(horizon / interval - 1e-9));
    for (std::size_t step = 1; step <= std::max<std::size_t>(1, steps); ++step) {
        double const t = interval * static_cast<double>(step);
        std::vector<double> sum(out.methods.size(), 0.0);
        for (auto const& [d, s] : cells) {
            std::vector<std::optional<double>> scores;
            for (auto const& m : out.methods) { scores.push_back(ValueAt(series.at({ m, d, s }), t)); }
            auto const r = TieRanks(scores, tau);
            for (std::size_t i = 0; i < r.size(); ++i) { sum[i] += r[i]; }
        }
        for (auto& v : sum) { v /= static_cast<double>(cells.size()); }
        out.times.push_back(t);
        out.avgRank.push_back(std::move(sum));
    }
    return out;
}

struct EquivalenceResult {
    bool winnerIsA { true };
    double t { 0.0 };        // winner first reaches the loser's final best
    double deltaT { 0.0 };   // loser's own attainment time minus t
    double loserAtT { 0.0 }; // loser's best so far at t, 0 before its first success
    double finalA { 0.0 };
    double finalB { 0.0 };

    // Positive when method a got there first.
    [[nodiscard]] double AdvantageA() const { return winnerIsA ? deltaT : -deltaT; }
};

inline EquivalenceResult TimeToEquivalence(std::span<StepPoint const> a, std::span<StepPoint const> b)
{
    if (a.empty() || b.empty()) { throw DataError("equivalence: a trace has no successful evaluation"); }
    // Series are strictly increasing, so the last point is the final best and
    // its time the first attainment of it.
    auto const& lastA = a.back();
    auto const& lastB = b.back();
    bool const aWins = lastA.value > lastB.value || (lastA.value == lastB.value && lastA.time <= lastB.time);
    auto const winner = aWins ? a : b;
    auto const loser = aWins ? b : a;
    double const target = loser.back().value;
    auto const hit = std::find_if(winner.begin(), winner.end(), [&](auto const& p) { return p.value >= target; });
    EquivalenceResult res;
    res.winnerIsA = aWins;
    res.t = hit->time;
    res.deltaT = loser.back().time - res.t;
    res.loserAtT = ValueAt(loser, res.t).value_or(0.0);
    res.finalA = lastA.value;
    res.finalB = lastB.value;
    return res;
}

struct EquivalenceRow {
    std::string dataset;
    std::uint64_t seed;
    std::string winner;
    EquivalenceResult result;
};

// Pairs the traces of methods a and b per (dataset, seed).
inline std::vector<EquivalenceRow> EquivalenceTable(std::span<LabeledTrace const> traces, std::string const& methodA,
    std::string const& methodB, TimeAxis axis = TimeAxis::Minutes)
{
    std::map<std::pair<std::string, std::uint64_t>, std::pair<RunTrace const*, RunTrace const*>> cells;
    for (auto const& t : traces) {
        auto& cell = cells[{ t.dataset, t.seed }];
        if (t.method == methodA) { cell.first = t.trace; }
        if (t.method == methodB) { cell.second = t.trace; }
    }
    std::vector<EquivalenceRow> rows;
    for (auto const& [key, pair] : cells) {
        if (pair.first == nullptr || pair.second == nullptr) {
            throw DataError(fmt::format("equivalence: {} seed {} lacks a trace for both methods", key.first, key.second));
        }
        auto const sa = BestSoFar(*pair.first, axis);
        auto const sb = BestSoFar(*pair.second, axis);
        auto const res = TimeToEquivalence(sa, sb);
        rows.push_back({ key.first, key.second, res.winnerIsA ? methodA : methodB, res });
    }
    return rows;
}

// Spearman correlation of each fraction's pipeline ranking with the
// full-data ranking. Scores are [fraction][pipeline]; NaN marks a failed
// pipeline, excluded pairwise. Fewer than two usable pipelines or a constant
// ranking give NaN; with exactly two the p-value is NaN.
struct CorrelationPoint {
    double fraction;
    double rho;
    double p;
    std::size_t pipelines;
};

inline std::vector<CorrelationPoint> CorrelationFromScores(std::span<double const> full, std::span<double const> fractions,
    std::vector<std::vector<double>> const& scores)
{
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<CorrelationPoint> out;
    for (std::size_t f = 0; f < fractions.size(); ++f) {
        std::vector<double> x;
        std::vector<double> y;
        for (std::size_t p = 0; p < full.size(); ++p) {
            if (std::isfinite(full[p]) && std::isfinite(scores[f][p])) {
                x.push_back(scores[f][p]);
                y.push_back(full[p]);
            }
        }
        CorrelationPoint pt { fractions[f], nan, nan, x.size() };
        try {
            if (x.size() >= 3) {
                auto const s = SpearmanRho(x, y);
                pt.rho = s.rho;
                pt.p = s.p;
            } else if (x.size() == 2) {
                pt.rho = PearsonCorrelation(AverageRanks(x), AverageRanks(y));
            }
        } catch (Error const&) {
            // constant scores: correlation undefined
        }
        out.push_back(pt);
    }
    return out;
}

struct CorrelationConfig {
    std::size_t pipelines { 20 };
    std::size_t repeats { 5 };
    std::size_t folds { 5 };
    std::vector<double> fractions { 0.5, 0.25, 0.125, 0.0625, 0.03125 };
    double timeoutSecs { 60.0 };
    std::uint64_t seed { 0 };
    std::size_t threads { 1 };
};

struct CorrelationResult {
    std::string dataset;
    std::vector<CorrelationPoint> points; // in the configured fraction order
    std::vector<std::string> pipelines;
    std::vector<double> fullScores;
    std::vector<std::vector<double>> scores;
};

namespace detail {
    inline std::vector<PipelineTree> DistinctRandomTrees(Registry const& reg, std::size_t n, RngStream& rng)
    {
        std::vector<PipelineTree> trees;
        std::set<std::string> seen;
        for (std::size_t attempt = 0; trees.size() < n && attempt < 1000 * n; ++attempt) {
            auto tree = RandomTree(reg, rng);
            if (seen.insert(CanonicalForm(tree)).second) { trees.push_back(std::move(tree)); }
        }
        return trees;
    }

    // Mean AUROC per pipeline over `repeats` stratified samples of size s,
    // each cross-validated; NaN when any repetition fails.
    inline std::vector<double> MeanAurocs(std::vector<PipelineTree> const& trees, Dataset const& data, std::size_t s,
        CorrelationConfig const& cfg, RngStream const& rng)
    {
        std::vector<std::vector<Fold>> plans;
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            auto subRng = rng.Substream(fmt::format("subset/{}/{}", s, r));
            auto const subset = s == data.Instances() ? FullView(data) : StratifiedSample(data, s, subRng, cfg.folds);
            auto foldRng = rng.Substream(fmt::format("folds/{}/{}", s, r));
            plans.push_back(KFoldPlan(subset, cfg.folds, foldRng));
        }
        return ParallelMap(trees.size(), cfg.threads, [&](std::size_t p) {
            double sum = 0.0;
            for (auto const& plan : plans) {
                auto const res = EvaluateOnFolds(trees[p], data, plan, Deadline::After(cfg.timeoutSecs));
                if (res.outcome != Outcome::Ok) { return std::numeric_limits<double>::quiet_NaN(); }
                sum += res.auroc;
            }
            return sum / static_cast<double>(plans.size());
        });
    }
} // namespace detail

inline CorrelationResult CorrelationExperiment(Dataset const& data, CorrelationConfig const& cfg, Registry const& reg = StandardRegistry())
{
    if (cfg.repeats == 0) { throw ConfigError("correlate: repeats must be positive"); }
    RngStream const root(cfg.seed, "correlate/" + data.Name());
    auto pipeRng = root.Substream("pipelines");
    auto const trees = detail::DistinctRandomTrees(reg, cfg.pipelines, pipeRng);
    auto const classes = static_cast<std::size_t>(data.Classes());
    for (double f : cfg.fractions) {
        if (!(f > 0.0 && f <= 1.0)) { throw ConfigError(fmt::format("correlate: fraction {} outside (0, 1]", f)); }
        auto const s = static_cast<std::size_t>(std::floor(f * static_cast<double>(data.Instances())));
        if (s < classes * cfg.folds) {
            throw ConfigError(fmt::format("{}: fraction {} leaves {} instances, fewer than classes x folds", data.Name(), f, s));
        }
    }
    CorrelationResult out;
    out.dataset = data.Name();
    for (auto const& t : trees) { out.pipelines.push_back(CanonicalForm(t)); }
    out.fullScores = detail::MeanAurocs(trees, data, data.Instances(), cfg, root);
    for (double f : cfg.fractions) {
        auto const s = static_cast<std::size_t>(std::floor(f * static_cast<double>(data.Instances())));
        out.scores.push_back(s == data.Instances() ? out.fullScores : detail::MeanAurocs(trees, data, s, cfg, root));
    }
    out.points = CorrelationFromScores(out.fullScores, cfg.fractions, out.scores);
    return out;
}

// CSV output; numbers carry 6 significant digits.
inline void WriteRankCsv(RankSeries const& series, std::ostream& out)
{
    out << AxisColumn(series.axis) << ",method,avg_rank\n";
    for (std::size_t t = 0; t < series.times.size(); ++t) {
        for (std::size_t m = 0; m < series.methods.size(); ++m) {
            out << fmt::format("{:.6g},{},{:.6g}\n", series.times[t], series.methods[m], series.avgRank[t][m]);
        }
    }
}

inline void WriteCorrelationCsv(std::span<CorrelationResult const> results, std::ostream& out)
{
    out << "dataset,fraction,rho,p\n";
    for (auto const& r : results) {
        for (auto const& p : r.points) { out << fmt::format("{},{:.6g},{:.6g},{:.6g}\n", r.dataset, p.fraction, p.rho, p.p); }
    }
}

inline void WriteEquivalenceCsv(std::span<EquivalenceRow const> rows, std::ostream& out, TimeAxis axis = TimeAxis::Minutes)
{
    char const* unit = axis == TimeAxis::Minutes ? "min" : "gen";
    out << fmt::format("dataset,seed,winner,t_{0},delta_t_{0},loser_auroc_at_t\n", unit);
    for (auto const& r : rows) {
        out << fmt::format("{},{},{},{:.6g},{:.6g},{:.6g}\n", r.dataset, r.seed, r.winner, r.result.t, r.result.deltaT, r.result.loserAtT);
    }
}

} // namespace ltpot
