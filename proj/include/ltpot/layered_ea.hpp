#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "core.hpp"
#include "dataset.hpp"
#include "evaluate.hpp"
#include "genetic_ops.hpp"
#include "nsga2.hpp"
#include "pipeline.hpp"
#include "registry.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace ltpot {

// [floor(N / 2^(M-1)), ..., floor(N / 2), N]
inline std::vector<std::size_t> LayerSampleSizes(std::size_t n, std::size_t layers, std::size_t classes = 2)
{
    if (layers == 0) { throw ConfigError("layer count must be at least 1"); }
    if (layers > 32 || n < (std::size_t { 1 } << (layers - 1)) * classes) {
        throw ConfigError(fmt::format("{} instances cannot be halved {} times while keeping all {} classes", n, layers - 1, classes));
    }
    std::vector<std::size_t> sizes(layers);
    for (std::size_t l = 0; l < layers; ++l) { sizes[l] = n >> (layers - 1 - l); }
    return sizes;
}

// Layer l (1-based) progresses at generation i iff (i mod g) < 2^(M-l+1).
inline bool LayerActive(std::size_t l, std::size_t i, std::size_t g, std::size_t layers)
{
    std::size_t const exponent = layers - l + 1;
    if (exponent >= 63) { return true; }
    return (i % g) < (std::size_t { 1 } << exponent);
}

// Per-individual time limit: half the data gets a quarter of the time.
inline double LayerTimeout(double topTimeout, std::size_t s, std::size_t n)
{
    double const r = static_cast<double>(s) / static_cast<double>(n);
    return topTimeout * r * r;
}

// True once no individual of layer l can still reach the top layer.
inline bool ShutdownCheck(std::size_t l, std::size_t remaining, std::size_t g, std::size_t layers)
{
    return remaining < (layers - l) * g;
}

struct Budget {
    std::optional<std::size_t> generations;
    std::optional<double> seconds;

    [[nodiscard]] bool GenerationMode() const { return generations.has_value(); }
};

struct RunConfig {
    std::size_t layers { 1 };
    std::vector<std::size_t> sampleSizes; // empty: halve the dataset per layer
    std::size_t g { 1 };
    Budget budget { 10, std::nullopt };
    std::size_t population { 30 };
    std::size_t k { 15 };
    std::size_t folds { kDefaultFolds };
    double timeoutSecs { 600.0 };
    VariationRates rates;
    std::uint64_t seed { 0 };
    std::size_t threads { 1 };
    bool timing { true };
    std::string method; // empty: "tpot" for one layer, "ltpot-<g>" otherwise

    [[nodiscard]] std::string MethodName() const
    {
        if (!method.empty()) { return method; }
        return layers == 1 ? std::string("tpot") : fmt::format("ltpot-{}", g);
    }

    // Fills in sample sizes and checks everything against the dataset.
    void Resolve(Dataset const& data)
    {
        if (sampleSizes.empty()) {
            sampleSizes = LayerSampleSizes(data.Instances(), layers, static_cast<std::size_t>(data.Classes()) * folds);
        }
        Validate(data);
    }

    void Validate(Dataset const& data) const
    {
        if (layers == 0) { throw ConfigError("layers must be at least 1"); }
        if (sampleSizes.size() != layers) {
            throw ConfigError(fmt::format("{} sample sizes given for {} layers", sampleSizes.size(), layers));
        }
        for (std::size_t l = 1; l < sampleSizes.size(); ++l) {
            if (sampleSizes[l] <= sampleSizes[l - 1]) { throw ConfigError("sample sizes must be strictly ascending"); }
        }
        if (sampleSizes.back() != data.Instances()) {
            throw ConfigError(fmt::format("top layer sample size {} differs from the dataset size {}", sampleSizes.back(), data.Instances()));
        }
        if (g == 0) { throw ConfigError("g must be at least 1"); }
        if (population == 0) { throw ConfigError("population must be positive"); }
        if (k == 0 || k > population) { throw ConfigError(fmt::format("k must lie in [1, {}], got {}", population, k)); }
        if (folds < 2) { throw ConfigError("folds must be at least 2"); }
        if (!(timeoutSecs > 0.0)) { throw ConfigError("timeout must be positive"); }
        if (threads == 0) { throw ConfigError("threads must be positive"); }
        rates.Validate();
        if (budget.generations.has_value() == budget.seconds.has_value()) {
            throw ConfigError("exactly one of a generation budget and a time budget is required");
        }
        if (budget.generations) {
            if (*budget.generations == 0) { throw ConfigError("generation budget must be positive"); }
            if (*budget.generations < (layers - 1) * g) {
                throw ConfigError(fmt::format("{} generations cannot reach layer {} with g = {}", *budget.generations, layers, g));
            }
        } else if (!(*budget.seconds > 0.0)) {
            throw ConfigError("time budget must be positive");
        }
        auto const classes = static_cast<std::size_t>(data.Classes());
        if (sampleSizes.front() < classes * folds) {
            throw ConfigError(fmt::format("lowest sample size {} is below classes x folds = {}", sampleSizes.front(), classes * folds));
        }
        if (data.MinClassCount() < folds) {
            throw ConfigError(fmt::format("{}: a class has fewer than {} instances", data.Name(), folds));
        }
    }
};

inline Json ToJson(RunConfig const& c)
{
    Json j;
    j["layers"] = c.layers;
    j["sample_sizes"] = c.sampleSizes;
    j["g"] = c.g;
    j["budget_generations"] = detail::Nullable(c.budget.generations);
    j["budget_seconds"] = detail::Nullable(c.budget.seconds);
    j["population"] = c.population;
    j["k"] = c.k;
    j["folds"] = c.folds;
    j["timeout_secs"] = c.timeoutSecs;
    j["crossover_rate"] = c.rates.crossover;
    j["mutation_rate"] = c.rates.mutation;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["trace_timing"] = c.timing;
    j["method"] = c.method;
    return j;
}

// Reads the keys present in `j` over `base`; unknown keys are rejected.
inline RunConfig RunConfigFromJson(Json const& j, RunConfig base = {})
{
    static char const* const known[] = { "layers", "sample_sizes", "g", "budget_generations", "budget_seconds", "population", "k",
        "folds", "timeout_secs", "crossover_rate", "mutation_rate", "seed", "threads", "trace_timing", "method" };
    if (!j.is_object()) { throw ConfigError("run configuration must be a JSON object"); }
    for (auto const& [key, value] : j.items()) {
        if (std::find_if(std::begin(known), std::end(known), [&](char const* k) { return key == k; }) == std::end(known)) {
            throw ConfigError(fmt::format("unknown configuration key '{}'", key));
        }
    }
    try {
        if (j.contains("layers")) { base.layers = j["layers"].get<std::size_t>(); }
        if (j.contains("sample_sizes")) { base.sampleSizes = j["sample_sizes"].get<std::vector<std::size_t>>(); }
        if (j.contains("g")) { base.g = j["g"].get<std::size_t>(); }
        if (j.contains("budget_generations") || j.contains("budget_seconds")) {
            base.budget.generations = detail::OptionalField<std::size_t>(j, "budget_generations");
            base.budget.seconds = detail::OptionalField<double>(j, "budget_seconds");
        }
        if (j.contains("population")) { base.population = j["population"].get<std::size_t>(); }
        if (j.contains("k")) { base.k = j["k"].get<std::size_t>(); }
        if (j.contains("folds")) { base.folds = j["folds"].get<std::size_t>(); }
        if (j.contains("timeout_secs")) { base.timeoutSecs = j["timeout_secs"].get<double>(); }
        if (j.contains("crossover_rate")) { base.rates.crossover = j["crossover_rate"].get<double>(); }
        if (j.contains("mutation_rate")) { base.rates.mutation = j["mutation_rate"].get<double>(); }
        if (j.contains("seed")) { base.seed = j["seed"].get<std::uint64_t>(); }
        if (j.contains("threads")) { base.threads = j["threads"].get<std::size_t>(); }
        if (j.contains("trace_timing")) { base.timing = j["trace_timing"].get<bool>(); }
        if (j.contains("method")) { base.method = j["method"].get<std::string>(); }
    } catch (Json::exception const& e) {
        throw ConfigError(fmt::format("run configuration: {}", e.what()));
    }
    return base;
}

struct LayerState {
    std::size_t index { 1 };
    std::size_t sampleSize { 0 };
    SubsetView subset;
    std::vector<Individual> population;
    bool fresh { false };    // next progression evaluates the population as is
    bool shutdown { false };
    double timeout { 0.0 };
};

struct RunResult {
    Individual best;
    std::size_t bestLayer { 0 };
    RunTrace trace;
    std::size_t totalEvaluations { 0 };
    double wallSeconds { 0.0 };
};

inline Json SummaryJson(RunResult const& r)
{
    Json j;
    auto const& f = r.best.GetFitness();
    j["best_pipeline"] = CanonicalForm(r.best.Tree());
    j["score"] = f ? Json(f->score) : Json(nullptr);
    j["auroc"] = f ? Json(r.best.Auroc()) : Json(nullptr);
    j["length"] = PipelineLength(r.best.Tree());
    j["total_evaluations"] = r.totalEvaluations;
    j["wall_seconds"] = r.wallSeconds;
    return j;
}

// Copies Top(L_l, k) into L_{l+1}, from layer M-1 down to 1, with fitness
// cleared, then reseeds L_1. Shut-down layers neither send nor receive and a
// shut-down L_1 is not reseeded. Returns the per-hop transfer counts.
inline std::vector<std::size_t> TransferStep(std::vector<LayerState>& layers, Registry const& reg, std::size_t p, std::size_t k, RngStream& rng)
{
    std::vector<std::size_t> counts(layers.empty() ? 0 : layers.size() - 1, 0);
    for (std::size_t l = layers.size() - 1; l-- > 0;) {
        auto& src = layers[l];
        auto& dst = layers[l + 1];
        if (src.shutdown || dst.shutdown) { continue; }
        std::vector<Individual> evaluated;
        for (auto const& ind : src.population) {
            if (ind.Status() == EvalStatus::Evaluated) { evaluated.push_back(ind); }
        }
        if (evaluated.empty()) { continue; }
        for (auto const& ind : Top(evaluated, k)) { dst.population.push_back(ind.Fresh()); }
        dst.fresh = true;
        counts[l] = std::min(k, evaluated.size());
    }
    if (!layers.empty() && !layers.front().shutdown) {
        layers.front().population = NewPopulation(reg, p, rng);
        layers.front().fresh = true;
    }
    return counts;
}

namespace detail {
    inline std::uint64_t SubsetId(std::size_t layer, std::size_t epoch)
    {
        return SplitMix64((static_cast<std::uint64_t>(layer) << 32U) ^ static_cast<std::uint64_t>(epoch)) | 1U;
    }

    // Evaluates a batch, fanning unique pipelines out over threads. Later
    // duplicates within the batch are reported as cache hits, exactly as a
    // sequential pass would, so traces do not depend on the thread count.
    class BatchEvaluator {
    public:
        BatchEvaluator(Evaluator& evaluator, RunConfig const& config, RngStream const& root, Clock::time_point start, Deadline runEnd)
            : evaluator_(evaluator)
            , config_(config)
            , root_(root)
            , start_(start)
            , runEnd_(runEnd)
        {
        }

        struct Item {
            EvalResult result;
            double elapsedMs;
        };

        std::vector<Item> Run(std::vector<PipelineTree const*> const& trees, SubsetView const& subset, double timeout)
        {
            std::vector<std::string> forms;
            std::map<std::string, std::size_t> first;
            std::vector<std::size_t> unique;
            for (std::size_t t = 0; t < trees.size(); ++t) {
                forms.push_back(CanonicalForm(*trees[t]));
                if (first.emplace(forms.back(), t).second) { unique.push_back(t); }
            }
            auto const foldRng = root_.Substream(fmt::format("folds/{}", subset.id));
            auto computed = ParallelMap(unique.size(), config_.threads, [&](std::size_t u) {
                auto res = evaluator_.Evaluate(*trees[unique[u]], subset, config_.folds, timeout, foldRng, runEnd_);
                return Item { std::move(res), std::chrono::duration<double, std::milli>(Clock::now() - start_).count() };
            });
            std::vector<Item> out(trees.size());
            for (std::size_t u = 0; u < unique.size(); ++u) { out[unique[u]] = computed[u]; }
            for (std::size_t t = 0; t < trees.size(); ++t) {
                std::size_t const f = first.at(forms[t]);
                if (f != t) {
                    out[t] = out[f];
                    out[t].result.cached = true;
                    out[t].result.wallTime = 0.0;
                }
            }
            return out;
        }

        [[nodiscard]] bool Known(PipelineTree const& tree, SubsetView const& subset) const
        {
            return evaluator_.Contains(CanonicalForm(tree), subset.id, config_.folds);
        }

    private:
        Evaluator& evaluator_;
        RunConfig const& config_;
        RngStream root_;
        Clock::time_point start_;
        Deadline runEnd_;
    };

    inline EvalRecord MakeRecord(RunConfig const& config, std::size_t generation, std::size_t layer, std::size_t sampleSize,
        PipelineTree const& tree, BatchEvaluator::Item const& item)
    {
        EvalRecord r;
        r.generation = generation;
        r.layer = layer;
        r.sampleSize = sampleSize;
        r.pipeline = CanonicalForm(tree);
        r.length = item.result.length;
        r.outcome = item.result.outcome;
        if (item.result.outcome == Outcome::Ok) {
            r.score = item.result.score;
            r.auroc = item.result.auroc;
        }
        r.seed = config.seed;
        r.cached = item.result.cached;
        if (config.timing) {
            r.wallTimeMs = item.result.wallTime * 1000.0;
            r.elapsedMs = item.elapsedMs;
        }
        return r;
    }

    inline RunHeader MakeHeader(RunConfig const& config, Dataset const& data)
    {
        RunHeader h;
        h.method = config.MethodName();
        h.dataset = data.Name();
        h.seed = config.seed;
        h.instances = data.Instances();
        h.layers = config.layers;
        h.sampleSizes = config.sampleSizes;
        h.g = config.g;
        h.population = config.population;
        h.k = config.k;
        h.folds = config.folds;
        h.timeoutSecs = config.timeoutSecs;
        h.budgetGenerations = config.budget.generations;
        h.budgetSeconds = config.budget.seconds;
        h.timing = config.timing;
        return h;
    }
} // namespace detail

// The layered evolutionary algorithm. With one layer it is the single-layer
// baseline: no toggling, transfers, reseeding or shutdown.
class LayeredEA {
public:
    LayeredEA(RunConfig config, Dataset const& data, Registry const& registry = StandardRegistry())
        : config_(std::move(config))
        , data_(data)
        , registry_(registry)
        , root_(config_.seed, "ltpot")
    {
        config_.Resolve(data_);
    }

    [[nodiscard]] RunConfig const& Config() const { return config_; }
    [[nodiscard]] std::vector<LayerState> const& Layers() const { return layers_; }

    RunResult Run()
    {
        auto const start = Clock::now();
        Deadline const runEnd = config_.budget.seconds ? Deadline::After(*config_.budget.seconds) : Deadline {};
        RunTrace trace(detail::MakeHeader(config_, data_));
        Evaluator evaluator;
        detail::BatchEvaluator batch(evaluator, config_, root_, start, runEnd);
        std::size_t const m = config_.layers;

        layers_.assign(m, {});
        for (std::size_t l = 0; l < m; ++l) {
            layers_[l].index = l + 1;
            layers_[l].sampleSize = config_.sampleSizes[l];
            layers_[l].timeout = LayerTimeout(config_.timeoutSecs, config_.sampleSizes[l], data_.Instances());
        }
        DrawSubsets(0);
        {
            auto rng = root_.Substream("init");
            layers_.front().population = NewPopulation(registry_, config_.population, rng);
            layers_.front().fresh = true;
        }

        std::size_t evaluations = 0;
        auto const genMode = config_.budget.GenerationMode();
        for (std::size_t i = 1; genMode ? i <= *config_.budget.generations : !runEnd.Expired(); ++i) {
            for (auto& layer : layers_) {
                if (layer.shutdown) { continue; }
                if (genMode && m > 1 && ShutdownCheck(layer.index, *config_.budget.generations - i, config_.g, m)) {
                    layer.shutdown = true;
                    trace.Append(ShutdownEvent { i, layer.index });
                    continue;
                }
                if (layer.population.empty()) { continue; }
                if (m > 1 && !LayerActive(layer.index, i, config_.g, m)) { continue; }
                if (runEnd.Expired()) { break; }
                evaluations += Progress(layer, i, batch, trace);
            }
            if (m > 1 && i % config_.g == 0) {
                auto rng = root_.Substream(fmt::format("reseed/{}", i));
                bool const reseed = !layers_.front().shutdown;
                auto const counts = TransferStep(layers_, registry_, config_.population, config_.k, rng);
                for (std::size_t l = counts.size(); l-- > 0;) { trace.Append(TransferEvent { i, l + 1, l + 2, counts[l] }); }
                if (reseed) { trace.Append(ReseedEvent { i, 1, config_.population }); }
                DrawSubsets(i / config_.g);
            }
        }

        RunResult result { FindBest(), 0, std::move(trace), evaluations, 0.0 };
        result.bestLayer = bestLayer_;
        result.wallSeconds = std::chrono::duration<double>(Clock::now() - start).count();
        return result;
    }

private:
    void DrawSubsets(std::size_t epoch)
    {
        for (auto& layer : layers_) {
            if (layer.sampleSize == data_.Instances()) {
                layer.subset = FullView(data_, 0);
                continue;
            }
            auto rng = root_.Substream(fmt::format("subset/{}/{}", layer.index, epoch));
            layer.subset = StratifiedSample(data_, layer.sampleSize, rng, config_.folds);
            layer.subset.id = detail::SubsetId(layer.index, epoch);
        }
    }

    std::size_t Progress(LayerState& layer, std::size_t i, detail::BatchEvaluator& batch, RunTrace& trace)
    {
        std::vector<Individual> candidates;
        bool const fresh = layer.fresh;
        layer.fresh = false;
        if (!fresh) {
            std::vector<Individual> parents;
            for (auto const& ind : layer.population) {
                if (ind.Status() == EvalStatus::Evaluated) { parents.push_back(ind); }
            }
            auto rng = root_.Substream(fmt::format("var/{}/{}", layer.index, i));
            // Offspring already scored on this subset are redrawn, so a converged
            // layer keeps exploring instead of replaying memoized results.
            auto const known = [&](PipelineTree const& t) { return batch.Known(t, layer.subset); };
            candidates = parents.empty() ? NewPopulation(registry_, config_.population, rng)
                                         : VarOr(parents, config_.population, config_.rates, rng, nullptr, known);
        }
        auto& toEvaluate = fresh ? layer.population : candidates;

        std::vector<PipelineTree const*> trees;
        std::vector<std::size_t> slots;
        for (std::size_t t = 0; t < toEvaluate.size(); ++t) {
            if (toEvaluate[t].Status() == EvalStatus::Unevaluated) {
                trees.push_back(&toEvaluate[t].Tree());
                slots.push_back(t);
            }
        }
        auto const items = batch.Run(trees, layer.subset, layer.timeout);
        for (std::size_t t = 0; t < items.size(); ++t) {
            auto& ind = toEvaluate[slots[t]];
            if (items[t].result.outcome == Outcome::Ok) {
                ind.MarkEvaluated(items[t].result.score, items[t].result.auroc);
            } else {
                ind.MarkFailed();
            }
            trace.Append(detail::MakeRecord(config_, i, layer.index, layer.sampleSize, ind.Tree(), items[t]));
        }

        std::vector<Individual> pool;
        for (auto* group : { &layer.population, &candidates }) {
            for (auto& ind : *group) {
                if (ind.Status() == EvalStatus::Evaluated) { pool.push_back(std::move(ind)); }
            }
        }
        if (pool.empty()) {
            layer.population.clear();
        } else {
            layer.population = Selection(pool, config_.population);
            trace.Append(SelectionEvent { i, layer.index, layer.sampleSize, pool.size(), layer.population.size() });
        }
        return items.size();
    }

    Individual FindBest()
    {
        for (std::size_t l = layers_.size(); l-- > 0;) {
            std::vector<Individual> evaluated;
            for (auto const& ind : layers_[l].population) {
                if (ind.Status() == EvalStatus::Evaluated) { evaluated.push_back(ind); }
            }
            if (!evaluated.empty()) {
                bestLayer_ = l + 1;
                return Top(evaluated, 1).front();
            }
        }
        throw NoViablePipeline("budget exhausted before any pipeline was evaluated successfully");
    }

    RunConfig config_;
    Dataset const& data_;
    Registry const& registry_;
    RngStream root_;
    std::vector<LayerState> layers_;
    std::size_t bestLayer_ { 0 };
};

inline RunResult SingleLayerBaseline(RunConfig config, Dataset const& data, Registry const& registry = StandardRegistry())
{
    config.layers = 1;
    config.sampleSizes = { data.Instances() };
    return LayeredEA(std::move(config), data, registry).Run();
}

// Evaluates batches of P random pipelines on the full dataset. A generation
// budget of G allows G batches; each batch counts as one generation.
inline RunResult RandomSearchBaseline(RunConfig config, Dataset const& data, Registry const& registry = StandardRegistry())
{
    config.layers = 1;
    config.sampleSizes = { data.Instances() };
    if (config.method.empty()) { config.method = "random"; }
    config.Resolve(data);
    auto const start = Clock::now();
    Deadline const runEnd = config.budget.seconds ? Deadline::After(*config.budget.seconds) : Deadline {};
    RngStream const root(config.seed, "random-search");
    RunTrace trace(detail::MakeHeader(config, data));
    Evaluator evaluator;
    detail::BatchEvaluator batch(evaluator, config, root, start, runEnd);
    auto const full = FullView(data, 0);
    std::vector<Individual> evaluated;
    std::size_t evaluations = 0;
    bool const genMode = config.budget.GenerationMode();
    for (std::size_t i = 1; genMode ? i <= *config.budget.generations : !runEnd.Expired(); ++i) {
        auto rng = root.Substream(fmt::format("draw/{}", i));
        auto pop = NewPopulation(registry, config.population, rng);
        std::vector<PipelineTree const*> trees;
        for (auto const& ind : pop) { trees.push_back(&ind.Tree()); }
        auto const items = batch.Run(trees, full, config.timeoutSecs);
        for (std::size_t t = 0; t < items.size(); ++t) {
            if (items[t].result.outcome == Outcome::Ok) {
                pop[t].MarkEvaluated(items[t].result.score, items[t].result.auroc);
                evaluated.push_back(pop[t]);
            }
            trace.Append(detail::MakeRecord(config, i, 1, data.Instances(), pop[t].Tree(), items[t]));
        }
        evaluations += items.size();
        if (!evaluated.empty()) { evaluated = Top(evaluated, 1); }
    }
    if (evaluated.empty()) { throw NoViablePipeline("budget exhausted before any pipeline was evaluated successfully"); }
    RunResult result { evaluated.front(), 1, std::move(trace), evaluations, 0.0 };
    result.wallSeconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
}

} // namespace ltpot
