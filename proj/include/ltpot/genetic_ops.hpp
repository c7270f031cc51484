#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "core.hpp"
#include "pipeline.hpp"
#include "registry.hpp"
#include "rng.hpp"

namespace ltpot {

inline constexpr std::size_t kMaxInitialPreprocessors = 3;

struct VariationRates {
    double crossover { 0.1 };
    double mutation { 0.9 };

    void Validate() const
    {
        if (crossover < 0.0 || crossover > 1.0 || mutation < 0.0 || mutation > 1.0 || crossover + mutation > 1.0 + 1e-12) {
            throw ConfigError(fmt::format("invalid variation rates (crossover {}, mutation {})", crossover, mutation));
        }
    }
};

namespace detail {
    inline Primitive RandomPrimitive(Registry const& reg, std::size_t op, RngStream& rng)
    {
        Primitive p { op, {} };
        for (auto const& hp : reg.Op(op).hyperparams) { p.values.push_back(rng.Index(hp.values.size())); }
        return p;
    }
} // namespace detail

// Uniform classifier, uniform chain length in [0, 3], uniform terminals.
inline PipelineTree RandomTree(Registry const& reg, RngStream& rng)
{
    if (reg.Classifiers().empty()) { throw ConfigError("registry has no classifier"); }
    std::vector<Primitive> chain;
    chain.push_back(detail::RandomPrimitive(reg, reg.Classifiers()[rng.Index(reg.Classifiers().size())], rng));
    std::size_t maxChain = std::min(kMaxInitialPreprocessors, reg.MaxPipelineLength() - 1);
    if (reg.Preprocessors().empty()) { maxChain = 0; }
    std::size_t const length = rng.Index(maxChain + 1);
    for (std::size_t i = 0; i < length; ++i) {
        chain.push_back(detail::RandomPrimitive(reg, reg.Preprocessors()[rng.Index(reg.Preprocessors().size())], rng));
    }
    return { reg, std::move(chain) };
}

inline std::vector<Individual> NewPopulation(Registry const& reg, std::size_t size, RngStream& rng)
{
    std::vector<Individual> pop;
    pop.reserve(size);
    for (std::size_t i = 0; i < size; ++i) { pop.emplace_back(RandomTree(reg, rng)); }
    return pop;
}

enum class MutationKind : std::uint8_t {
    Point = 1U << 0U,   // resample one terminal
    Insert = 1U << 1U,  // add a preprocessor to the chain
    Shrink = 1U << 2U,  // remove a preprocessor
    Replace = 1U << 3U, // swap a primitive for another of the same kind
};

inline constexpr std::uint8_t kAllMutations = 0x0F;

namespace detail {
    inline bool Allowed(std::uint8_t mask, MutationKind k) { return (mask & static_cast<std::uint8_t>(k)) != 0; }

    inline std::span<std::size_t const> SameKind(Registry const& reg, std::size_t op)
    {
        return reg.Op(op).kind == OperatorKind::Classifier ? reg.Classifiers() : reg.Preprocessors();
    }
} // namespace detail

// Applies one mutation chosen uniformly among those that are applicable and
// permitted by `mask`. Every applicable mutation changes the canonical form.
// Returns an unchanged copy when nothing applies.
inline PipelineTree Mutate(PipelineTree const& tree, RngStream& rng, std::uint8_t mask = kAllMutations)
{
    auto const& reg = tree.Grammar();
    std::vector<Primitive> chain(tree.Chain().begin(), tree.Chain().end());

    std::vector<std::pair<std::size_t, std::size_t>> terminals;
    std::vector<std::size_t> replaceable;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        auto const& spec = reg.Op(chain[i].op);
        for (std::size_t h = 0; h < spec.hyperparams.size(); ++h) {
            if (spec.hyperparams[h].values.size() > 1) { terminals.emplace_back(i, h); }
        }
        if (detail::SameKind(reg, chain[i].op).size() > 1) { replaceable.push_back(i); }
    }

    std::vector<MutationKind> options;
    if (detail::Allowed(mask, MutationKind::Point) && !terminals.empty()) { options.push_back(MutationKind::Point); }
    if (detail::Allowed(mask, MutationKind::Insert) && chain.size() < reg.MaxPipelineLength() && !reg.Preprocessors().empty()) {
        options.push_back(MutationKind::Insert);
    }
    if (detail::Allowed(mask, MutationKind::Shrink) && chain.size() >= 2) { options.push_back(MutationKind::Shrink); }
    if (detail::Allowed(mask, MutationKind::Replace) && !replaceable.empty()) { options.push_back(MutationKind::Replace); }
    if (options.empty()) { return tree; }

    switch (options[rng.Index(options.size())]) {
    case MutationKind::Point: {
        auto [i, h] = terminals[rng.Index(terminals.size())];
        std::size_t const domain = reg.Op(chain[i].op).hyperparams[h].values.size();
        std::size_t v = rng.Index(domain - 1);
        if (v >= chain[i].values[h]) { ++v; }
        chain[i].values[h] = v;
        break;
    }
    case MutationKind::Insert: {
        std::size_t const at = 1 + rng.Index(chain.size());
        auto const op = reg.Preprocessors()[rng.Index(reg.Preprocessors().size())];
        chain.insert(chain.begin() + static_cast<std::ptrdiff_t>(at), detail::RandomPrimitive(reg, op, rng));
        break;
    }
    case MutationKind::Shrink: {
        std::size_t const at = 1 + rng.Index(chain.size() - 1);
        chain.erase(chain.begin() + static_cast<std::ptrdiff_t>(at));
        break;
    }
    case MutationKind::Replace: {
        std::size_t const at = replaceable[rng.Index(replaceable.size())];
        auto const peers = detail::SameKind(reg, chain[at].op);
        std::vector<std::size_t> others;
        std::copy_if(peers.begin(), peers.end(), std::back_inserter(others), [&](auto id) { return id != chain[at].op; });
        chain[at] = detail::RandomPrimitive(reg, others[rng.Index(others.size())], rng);
        break;
    }
    }
    return { reg, std::move(chain) };
}

struct CrossoverResult {
    PipelineTree first;
    PipelineTree second;
    bool applied { false }; // false: no shared primitive, inputs returned unchanged
};

// One-point crossover at a primitive shared by both parents. Either the data
// inputs feeding the shared primitive are exchanged, or one corresponding
// hyperparameter terminal is. If the chosen variant is impossible (length cap,
// or the primitive has no terminals) the other one is tried.
inline CrossoverResult Crossover(PipelineTree const& a, PipelineTree const& b, RngStream& rng)
{
    auto const& reg = a.Grammar();
    auto ca = a.Chain();
    auto cb = b.Chain();

    std::vector<std::size_t> shared;
    for (auto const& p : ca) {
        bool inB = std::any_of(cb.begin(), cb.end(), [&](auto const& q) { return q.op == p.op; });
        if (inB && std::find(shared.begin(), shared.end(), p.op) == shared.end()) { shared.push_back(p.op); }
    }
    if (shared.empty()) { return { a, b, false }; }
    std::sort(shared.begin(), shared.end());

    std::size_t const op = shared[rng.Index(shared.size())];
    auto positions = [op](std::span<Primitive const> chain) {
        std::vector<std::size_t> pos;
        for (std::size_t i = 0; i < chain.size(); ++i) {
            if (chain[i].op == op) { pos.push_back(i); }
        }
        return pos;
    };
    auto const pa = positions(ca);
    auto const pb = positions(cb);
    // The r-th occurrence in one parent pairs with the r-th in the other, so
    // identical parents always exchange identical material.
    std::size_t const r = rng.Index(std::min(pa.size(), pb.size()));
    std::size_t const i = pa[r];
    std::size_t const j = pb[r];
    bool const preferSubtree = rng.Bernoulli(0.5);
    std::size_t const hpCount = reg.Op(op).hyperparams.size();
    std::size_t const hpPick = hpCount > 0 ? rng.Index(hpCount) : 0;

    auto trySubtree = [&]() -> std::optional<CrossoverResult> {
        std::size_t const lenA = (i + 1) + (cb.size() - j - 1);
        std::size_t const lenB = (j + 1) + (ca.size() - i - 1);
        if (lenA > reg.MaxPipelineLength() || lenB > reg.MaxPipelineLength()) { return std::nullopt; }
        std::vector<Primitive> na(ca.begin(), ca.begin() + static_cast<std::ptrdiff_t>(i + 1));
        na.insert(na.end(), cb.begin() + static_cast<std::ptrdiff_t>(j + 1), cb.end());
        std::vector<Primitive> nb(cb.begin(), cb.begin() + static_cast<std::ptrdiff_t>(j + 1));
        nb.insert(nb.end(), ca.begin() + static_cast<std::ptrdiff_t>(i + 1), ca.end());
        return CrossoverResult { { reg, std::move(na) }, { reg, std::move(nb) }, true };
    };
    auto tryTerminal = [&]() -> std::optional<CrossoverResult> {
        if (hpCount == 0) { return std::nullopt; }
        std::vector<Primitive> na(ca.begin(), ca.end());
        std::vector<Primitive> nb(cb.begin(), cb.end());
        std::swap(na[i].values[hpPick], nb[j].values[hpPick]);
        return CrossoverResult { { reg, std::move(na) }, { reg, std::move(nb) }, true };
    };

    auto result = preferSubtree ? trySubtree() : tryTerminal();
    if (!result) { result = preferSubtree ? tryTerminal() : trySubtree(); }
    if (!result) { return { a, b, false }; }
    return std::move(*result);
}

struct VarOrCounts {
    std::size_t crossover { 0 }; // crossover branch drawn (including no-ops)
    std::size_t crossoverNoop { 0 };
    std::size_t mutation { 0 };
    std::size_t clone { 0 };
};

inline constexpr std::size_t kNoveltyAttempts = 50;

// Produces n unevaluated offspring. Each one is, with probability
// rates.crossover, the first child of crossing two uniformly drawn parents;
// with probability rates.mutation a mutant of one parent; otherwise a clone.
// A crossover with no shared primitive degrades to a clone of the first parent.
// With isKnown given, a crossover or mutation whose result it accepts is
// redrawn (new parents, new operator draw) up to kNoveltyAttempts times; the
// last attempt is kept if none is new.
inline std::vector<Individual> VarOr(std::span<Individual const> parents, std::size_t n, VariationRates const& rates,
    RngStream& rng, VarOrCounts* counts = nullptr, std::function<bool(PipelineTree const&)> const& isKnown = {})
{
    if (parents.empty()) { throw Error("VarOr: empty parent pool"); }
    for (auto const& p : parents) {
        if (p.Status() != EvalStatus::Evaluated) { throw Error("VarOr: parents must be evaluated"); }
    }
    std::size_t const attempts = isKnown ? kNoveltyAttempts : 1;
    VarOrCounts local;
    std::vector<Individual> offspring;
    offspring.reserve(n);
    for (std::size_t o = 0; o < n; ++o) {
        double const u = rng.Uniform();
        if (u < rates.crossover) {
            ++local.crossover;
            std::optional<CrossoverResult> res;
            for (std::size_t t = 0; t < attempts; ++t) {
                auto const& a = parents[rng.Index(parents.size())].Tree();
                auto const& b = parents[rng.Index(parents.size())].Tree();
                res = Crossover(a, b, rng);
                if (!isKnown || !isKnown(res->first)) { break; }
            }
            if (!res->applied) { ++local.crossoverNoop; }
            offspring.emplace_back(std::move(res->first));
        } else if (u < rates.crossover + rates.mutation) {
            ++local.mutation;
            std::optional<PipelineTree> child;
            for (std::size_t t = 0; t < attempts; ++t) {
                child = Mutate(parents[rng.Index(parents.size())].Tree(), rng);
                if (!isKnown || !isKnown(*child)) { break; }
            }
            offspring.emplace_back(std::move(*child));
        } else {
            ++local.clone;
            offspring.emplace_back(parents[rng.Index(parents.size())].Tree());
        }
    }
    if (counts != nullptr) { *counts = local; }
    return offspring;
}

} // namespace ltpot
