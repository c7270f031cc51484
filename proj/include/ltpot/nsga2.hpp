#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "core.hpp"
#include "pipeline.hpp"

namespace ltpot {

// Two-objective fitness: score is maximized, length minimized.
struct FitnessPair {
    double score { 0.0 };
    std::size_t length { 1 };

    friend bool operator==(FitnessPair const&, FitnessPair const&) = default;
};

inline bool Dominates(FitnessPair const& a, FitnessPair const& b)
{
    bool const noWorse = a.score >= b.score && a.length <= b.length;
    bool const better = a.score > b.score || a.length < b.length;
    return noWorse && better;
}

struct FrontAssignment {
    std::vector<std::size_t> front; // 0-based front index per individual
    std::vector<double> crowding;   // crowding distance within its front

    [[nodiscard]] std::size_t FrontCount() const
    {
        return front.empty() ? 0 : *std::max_element(front.begin(), front.end()) + 1;
    }
};

// Crowding distance of the members of one front. Per objective, members are
// stably sorted and the two extremes get +inf; interior members accumulate the
// normalized gap between their neighbours. A zero-range objective adds 0.
inline std::vector<double> CrowdingDistance(std::span<FitnessPair const> front)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::size_t const n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), inf);
        return dist;
    }
    std::vector<std::size_t> order(n);

    auto accumulate = [&](auto value) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return value(i) < value(j); });
        dist[order.front()] = inf;
        dist[order.back()] = inf;
        double const range = value(order.back()) - value(order.front());
        if (range <= 0.0) { return; }
        for (std::size_t r = 1; r + 1 < n; ++r) {
            dist[order[r]] += (value(order[r + 1]) - value(order[r - 1])) / range;
        }
    };
    accumulate([&](std::size_t i) { return front[i].score; });
    accumulate([&](std::size_t i) { return static_cast<double>(front[i].length); });
    return dist;
}

// Fast non-dominated sort; also fills per-front crowding distances.
inline FrontAssignment NonDominatedSort(std::span<FitnessPair const> fitness)
{
    std::size_t const n = fitness.size();
    FrontAssignment out { std::vector<std::size_t>(n, 0), std::vector<double>(n, 0.0) };
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dominatedBy(n, 0);
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) { continue; }
            if (Dominates(fitness[i], fitness[j])) {
                dominated[i].push_back(j);
            } else if (Dominates(fitness[j], fitness[i])) {
                ++dominatedBy[i];
            }
        }
        if (dominatedBy[i] == 0) { current.push_back(i); }
    }

    std::size_t rank = 0;
    while (!current.empty()) {
        std::vector<FitnessPair> members;
        members.reserve(current.size());
        for (auto i : current) {
            out.front[i] = rank;
            members.push_back(fitness[i]);
        }
        auto const crowd = CrowdingDistance(members);
        for (std::size_t m = 0; m < current.size(); ++m) { out.crowding[current[m]] = crowd[m]; }

        std::vector<std::size_t> next;
        for (auto i : current) {
            for (auto j : dominated[i]) {
                if (--dominatedBy[j] == 0) { next.push_back(j); }
            }
        }
        std::sort(next.begin(), next.end());
        current = std::move(next);
        ++rank;
    }
    return out;
}

// Indices of p survivors: whole fronts in order, the last partial front cut by
// descending crowding distance (ties: higher score, shorter, earlier input).
// With fewer than p inputs the ordered list is cycled until p.
inline std::vector<std::size_t> SelectIndices(std::span<FitnessPair const> fitness, std::size_t p)
{
    if (p == 0) { throw Error("Selection: survivor count must be positive"); }
    if (fitness.empty()) { throw Error("Selection: empty population"); }
    auto const fa = NonDominatedSort(fitness);
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) {
        if (fa.front[i] != fa.front[j]) { return fa.front[i] < fa.front[j]; }
        if (fa.crowding[i] != fa.crowding[j]) { return fa.crowding[i] > fa.crowding[j]; }
        if (fitness[i].score != fitness[j].score) { return fitness[i].score > fitness[j].score; }
        if (fitness[i].length != fitness[j].length) { return fitness[i].length < fitness[j].length; }
        return i < j;
    });
    std::vector<std::size_t> out;
    out.reserve(p);
    for (std::size_t t = 0; t < p; ++t) { out.push_back(order[t % order.size()]); }
    return out;
}

// Indices of the min(k, n) best by (front, score desc, length asc, input order).
inline std::vector<std::size_t> TopIndices(std::span<FitnessPair const> fitness, std::size_t k)
{
    auto const fa = NonDominatedSort(fitness);
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) {
        if (fa.front[i] != fa.front[j]) { return fa.front[i] < fa.front[j]; }
        if (fitness[i].score != fitness[j].score) { return fitness[i].score > fitness[j].score; }
        if (fitness[i].length != fitness[j].length) { return fitness[i].length < fitness[j].length; }
        return i < j;
    });
    order.resize(std::min(k, order.size()));
    return order;
}

namespace detail {
    inline std::vector<FitnessPair> FitnessOf(std::span<Individual const> pop)
    {
        std::vector<FitnessPair> out;
        out.reserve(pop.size());
        for (auto const& ind : pop) {
            if (ind.Status() != EvalStatus::Evaluated) { throw Error("selection requires evaluated individuals"); }
            out.push_back({ ind.GetFitness()->score, ind.GetFitness()->length });
        }
        return out;
    }

    inline std::vector<Individual> Gather(std::span<Individual const> pop, std::vector<std::size_t> const& idx)
    {
        std::vector<Individual> out;
        out.reserve(idx.size());
        for (auto i : idx) { out.push_back(pop[i]); }
        return out;
    }
} // namespace detail

inline std::vector<Individual> Selection(std::span<Individual const> pop, std::size_t p)
{
    return detail::Gather(pop, SelectIndices(detail::FitnessOf(pop), p));
}

inline std::vector<Individual> Top(std::span<Individual const> pop, std::size_t k)
{
    return detail::Gather(pop, TopIndices(detail::FitnessOf(pop), k));
}

} // namespace ltpot
