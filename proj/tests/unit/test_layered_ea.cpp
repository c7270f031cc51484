#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace ltpot;

namespace {

RunConfig SmallConfig(std::size_t layers, std::size_t g, std::size_t generations, std::size_t p, std::size_t k, std::uint64_t seed = 1)
{
    RunConfig c;
    c.layers = layers;
    c.g = g;
    c.budget = { generations, std::nullopt };
    c.population = p;
    c.k = k;
    c.seed = seed;
    c.timing = false;
    c.timeoutSecs = 30.0;
    return c;
}

std::string Jsonl(RunTrace const& trace)
{
    std::ostringstream out;
    WriteJsonl(trace, out);
    return out.str();
}

template <typename E>
std::vector<E> EventsOf(RunTrace const& trace)
{
    std::vector<E> out;
    for (auto const& e : trace.Events()) {
        if (auto const* x = std::get_if<E>(&e)) { out.push_back(*x); }
    }
    return out;
}

LayerState Layer(std::size_t index, std::vector<Individual> pop, bool shutdown = false)
{
    LayerState s;
    s.index = index;
    s.population = std::move(pop);
    s.shutdown = shutdown;
    return s;
}

std::vector<Individual> EvaluatedPopulation(std::size_t n, std::uint64_t seed)
{
    std::vector<Individual> pop;
    RngStream rng(seed, "scores");
    for (auto const& t : test::RandomTrees(n, seed)) { pop.push_back(test::Evaluated(t, rng.Uniform())); }
    return pop;
}

} // namespace

TEST(LayerSampleSizes, Examples)
{
    EXPECT_EQ(LayerSampleSizes(1000000, 4), (std::vector<std::size_t> { 125000, 250000, 500000, 1000000 }));
    EXPECT_EQ(LayerSampleSizes(100, 3), (std::vector<std::size_t> { 25, 50, 100 }));
    EXPECT_EQ(LayerSampleSizes(77, 1), (std::vector<std::size_t> { 77 }));
    EXPECT_EQ(LayerSampleSizes(101, 3), (std::vector<std::size_t> { 25, 50, 101 }));
    EXPECT_THROW(LayerSampleSizes(15, 4, 2), ConfigError);
    EXPECT_NO_THROW(LayerSampleSizes(16, 4, 2));
    EXPECT_THROW(LayerSampleSizes(100, 0), ConfigError);
}

TEST(LayerActive, ActivityPattern)
{
    std::size_t const expected[] = { 12, 8, 4, 2 };
    for (std::size_t l = 1; l <= 4; ++l) {
        std::size_t active = 0;
        for (std::size_t i = 1; i <= 12; ++i) { active += LayerActive(l, i, 12, 4) ? 1 : 0; }
        EXPECT_EQ(active, expected[l - 1]) << "layer " << l;
    }
    for (std::size_t i = 1; i <= 48; ++i) {
        EXPECT_EQ(LayerActive(4, i, 12, 4), i % 12 == 0 || i % 12 == 1);
        EXPECT_TRUE(LayerActive(1, i, 12, 4));
        EXPECT_TRUE(LayerActive(1, i, 2, 1));
    }
}

TEST(LayerTimeout, QuadraticRule)
{
    EXPECT_EQ(LayerTimeout(600.0, 1000, 1000), 600.0);
    EXPECT_EQ(LayerTimeout(600.0, 500, 1000), 150.0);
    EXPECT_EQ(LayerTimeout(600.0, 125, 1000), 9.375);
}

TEST(ShutdownCheck, Boundary)
{
    EXPECT_TRUE(ShutdownCheck(1, 47, 16, 4));
    EXPECT_FALSE(ShutdownCheck(1, 48, 16, 4));
    for (std::size_t r = 0; r < 100; ++r) { EXPECT_FALSE(ShutdownCheck(4, r, 16, 4)); }
}

TEST(TransferStep, TwoLayers)
{
    std::vector<LayerState> layers { Layer(1, EvaluatedPopulation(30, 1)), Layer(2, {}) };
    auto const before = Top(layers[0].population, 15);
    RngStream rng(1, "reseed");
    auto const counts = TransferStep(layers, StandardRegistry(), 30, 15, rng);
    EXPECT_EQ(counts, (std::vector<std::size_t> { 15 }));
    ASSERT_EQ(layers[1].population.size(), 15U);
    for (std::size_t i = 0; i < 15; ++i) {
        EXPECT_EQ(layers[1].population[i].Status(), EvalStatus::Unevaluated);
        EXPECT_EQ(layers[1].population[i].Tree(), before[i].Tree());
    }
    EXPECT_TRUE(layers[1].fresh);
    ASSERT_EQ(layers[0].population.size(), 30U);
    for (auto const& ind : layers[0].population) { EXPECT_EQ(ind.Status(), EvalStatus::Unevaluated); }
    EXPECT_TRUE(layers[0].fresh);
}

TEST(TransferStep, CascadeNeedsOneEpochPerHop)
{
    std::vector<LayerState> layers { Layer(1, EvaluatedPopulation(10, 2)), Layer(2, {}), Layer(3, {}) };
    RngStream rng(2, "reseed");
    auto const counts = TransferStep(layers, StandardRegistry(), 10, 4, rng);
    EXPECT_EQ(counts, (std::vector<std::size_t> { 4, 0 }));
    EXPECT_EQ(layers[1].population.size(), 4U);
    EXPECT_TRUE(layers[2].population.empty());
}

TEST(TransferStep, SmallSourceAndShutdown)
{
    std::vector<LayerState> layers { Layer(1, EvaluatedPopulation(30, 3)), Layer(2, EvaluatedPopulation(7, 4)), Layer(3, {}) };
    RngStream rng(3, "reseed");
    auto const counts = TransferStep(layers, StandardRegistry(), 30, 15, rng);
    EXPECT_EQ(counts, (std::vector<std::size_t> { 15, 7 }));
    EXPECT_EQ(layers[2].population.size(), 7U);
    // The source keeps its members until its own next Selection.
    EXPECT_EQ(layers[1].population.size(), 22U);

    std::vector<LayerState> off { Layer(1, EvaluatedPopulation(5, 5), true), Layer(2, {}) };
    auto const offCounts = TransferStep(off, StandardRegistry(), 5, 2, rng);
    EXPECT_EQ(offCounts, (std::vector<std::size_t> { 0 }));
    EXPECT_TRUE(off[1].population.empty());
    EXPECT_EQ(off[0].population.front().Status(), EvalStatus::Evaluated);
}

TEST(RunConfig, Validation)
{
    auto const data = test::SeparableBlobs(64);
    auto ok = SmallConfig(4, 2, 8, 4, 2);
    EXPECT_NO_THROW(ok.Resolve(data));
    EXPECT_EQ(ok.sampleSizes, (std::vector<std::size_t> { 8, 16, 32, 64 }));

    auto tooShort = SmallConfig(4, 2, 5, 4, 2);
    EXPECT_THROW(tooShort.Resolve(data), ConfigError);
    auto badK = SmallConfig(2, 2, 8, 4, 5);
    EXPECT_THROW(badK.Resolve(data), ConfigError);
    auto both = SmallConfig(2, 2, 8, 4, 2);
    both.budget.seconds = 5.0;
    EXPECT_THROW(both.Resolve(data), ConfigError);
    auto descending = SmallConfig(2, 2, 8, 4, 2);
    descending.sampleSizes = { 64, 32 };
    EXPECT_THROW(descending.Resolve(data), ConfigError);
    auto wrongTop = SmallConfig(2, 2, 8, 4, 2);
    wrongTop.sampleSizes = { 16, 32 };
    EXPECT_THROW(wrongTop.Resolve(data), ConfigError);
}

TEST(RunConfig, JsonRoundTripAndUnknownKeys)
{
    auto c = SmallConfig(3, 4, 20, 10, 5, 99);
    c.sampleSizes = { 10, 20, 40 };
    c.method = "custom";
    auto const back = RunConfigFromJson(ToJson(c));
    EXPECT_EQ(ToJson(back).dump(), ToJson(c).dump());
    EXPECT_THROW(RunConfigFromJson(Json::parse(R"({"layer": 3})")), ConfigError);
    EXPECT_THROW(RunConfigFromJson(Json::parse(R"({"layers": "three"})")), ConfigError);
    auto const secs = RunConfigFromJson(Json::parse(R"({"budget_seconds": 30})"), c);
    EXPECT_FALSE(secs.budget.generations);
    EXPECT_EQ(*secs.budget.seconds, 30.0);
    EXPECT_EQ(c.MethodName(), "custom");
    EXPECT_EQ(SmallConfig(1, 1, 1, 1, 1).MethodName(), "tpot");
    EXPECT_EQ(SmallConfig(4, 16, 1, 1, 1).MethodName(), "ltpot-16");
}

// M=4, g=2, G=8: every layer is active every generation (i mod 2 < 2), layer l
// shuts down once 8 - i < (4 - l) * 2, so L1 at i=3, L2 at i=5, L3 at i=7.
// Individuals climb one layer per transfer: L2 evaluates at 3-4, L3 at 5-6,
// L4 at 7-8.
TEST(LayeredEA, HandSimulatedSchedule)
{
    auto const data = test::SeparableBlobs(64);
    LayeredEA ea(SmallConfig(4, 2, 8, 4, 2, 7), data);
    auto const result = ea.Run();
    auto const& trace = result.trace;

    std::vector<std::pair<std::size_t, std::size_t>> evalLayers;
    for (auto const& r : trace.Evaluations()) {
        if (evalLayers.empty() || evalLayers.back() != std::pair { r.generation, r.layer }) { evalLayers.emplace_back(r.generation, r.layer); }
        EXPECT_EQ(r.sampleSize, (std::size_t { 64 } >> (4 - r.layer)));
    }
    std::vector<std::pair<std::size_t, std::size_t>> const expectedLayers { { 1, 1 }, { 2, 1 }, { 3, 2 }, { 4, 2 }, { 5, 3 }, { 6, 3 },
        { 7, 4 }, { 8, 4 } };
    EXPECT_EQ(evalLayers, expectedLayers);

    auto const shutdowns = EventsOf<ShutdownEvent>(trace);
    ASSERT_EQ(shutdowns.size(), 3U);
    EXPECT_EQ(shutdowns[0].generation, 3U);
    EXPECT_EQ(shutdowns[0].layer, 1U);
    EXPECT_EQ(shutdowns[1].generation, 5U);
    EXPECT_EQ(shutdowns[1].layer, 2U);
    EXPECT_EQ(shutdowns[2].generation, 7U);
    EXPECT_EQ(shutdowns[2].layer, 3U);

    auto const transfers = EventsOf<TransferEvent>(trace);
    ASSERT_EQ(transfers.size(), 12U);
    std::set<std::size_t> at;
    for (auto const& t : transfers) {
        at.insert(t.generation);
        EXPECT_EQ(t.to, t.from + 1);
    }
    EXPECT_EQ(at, (std::set<std::size_t> { 2, 4, 6, 8 }));
    auto count = [&](std::size_t gen, std::size_t from) {
        for (auto const& t : transfers) {
            if (t.generation == gen && t.from == from) { return t.count; }
        }
        return std::size_t { 99 };
    };
    EXPECT_EQ(count(2, 1), 2U);
    EXPECT_EQ(count(4, 2), 2U);
    EXPECT_EQ(count(6, 3), 2U);
    for (std::size_t from : { 1, 2, 3 }) { EXPECT_EQ(count(8, from), 0U); }
    EXPECT_EQ(count(2, 2) + count(2, 3) + count(4, 1) + count(4, 3) + count(6, 1) + count(6, 2), 0U);

    auto const reseeds = EventsOf<ReseedEvent>(trace);
    ASSERT_EQ(reseeds.size(), 1U);
    EXPECT_EQ(reseeds[0].generation, 2U);

    // Received individuals are evaluated as is: exactly k records on arrival.
    std::size_t arrivals = 0;
    for (auto const& r : trace.Evaluations()) { arrivals += (r.generation == 3 || r.generation == 5 || r.generation == 7) ? 1 : 0; }
    EXPECT_EQ(arrivals, 6U);
    EXPECT_EQ(result.bestLayer, 4U);
    EXPECT_EQ(result.totalEvaluations, trace.Evaluations().size());
}

TEST(LayeredEA, SingleLayerIsTheBaseline)
{
    auto const data = test::SeparableBlobs(60);
    auto const cfg = SmallConfig(1, 1, 4, 8, 4, 3);
    auto const a = LayeredEA(cfg, data).Run();
    auto const b = SingleLayerBaseline(cfg, data);
    EXPECT_EQ(Jsonl(a.trace), Jsonl(b.trace));
    EXPECT_EQ(a.trace.Header().method, "tpot");
    EXPECT_TRUE(EventsOf<TransferEvent>(a.trace).empty());
    EXPECT_TRUE(EventsOf<ShutdownEvent>(a.trace).empty());
}

TEST(LayeredEA, ByteIdenticalAcrossRunsAndThreadCounts)
{
    SynthConfig sc;
    sc.instances = 200;
    sc.seed = 4;
    auto const data = GenerateDataset(sc);
    auto cfg = SmallConfig(3, 3, 9, 6, 3, 11);
    auto const first = Jsonl(LayeredEA(cfg, data).Run().trace);
    EXPECT_EQ(first, Jsonl(LayeredEA(cfg, data).Run().trace));
    cfg.threads = 3;
    EXPECT_EQ(first, Jsonl(LayeredEA(cfg, data).Run().trace));
    cfg.seed = 12;
    EXPECT_NE(first, Jsonl(LayeredEA(cfg, data).Run().trace));
}

TEST(SingleLayerBaseline, SolvesSeparableBlobs)
{
    auto const data = test::SeparableBlobs(60);
    // GaussianNB alone scores 1.0 on this data.
    Evaluator ev;
    EXPECT_EQ(ev.Evaluate(test::Parse("GaussianNB(INPUT)"), FullView(data), 3, 30.0, RngStream(0, "f")).score, 1.0);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto const r = SingleLayerBaseline(SmallConfig(1, 1, 5, 20, 10, seed), data);
        EXPECT_EQ(r.best.GetFitness()->score, 1.0) << "seed " << seed;
        auto const curve = BestSoFar(r.trace, TimeAxis::Generations);
        for (std::size_t i = 1; i < curve.size(); ++i) { EXPECT_GE(curve[i].value, curve[i - 1].value); }
    }
}

TEST(RandomSearchBaseline, CountsAndDeterminism)
{
    auto const data = test::SeparableBlobs(60);
    auto const cfg = SmallConfig(1, 1, 1, 20, 10, 5);
    auto const r = RandomSearchBaseline(cfg, data);
    EXPECT_EQ(r.trace.Evaluations().size(), 20U);
    EXPECT_EQ(r.trace.Header().method, "random");
    EXPECT_EQ(Jsonl(r.trace), Jsonl(RandomSearchBaseline(cfg, data).trace));
}

TEST(RandomSearchBaseline, SolvesSeparableBlobsWithin50Draws)
{
    auto const data = test::SeparableBlobs(60);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto const r = RandomSearchBaseline(SmallConfig(1, 1, 1, 50, 1, seed), data);
        EXPECT_EQ(r.best.GetFitness()->score, 1.0) << "seed " << seed;
    }
}

// Random small runs; checks the structural guarantees of the trace.
TEST(LayeredEA, TraceInvariants)
{
    auto const data = test::SeparableBlobs(96, 9);
    RngStream gen(21, "invariants");
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t const m = 1 + gen.Index(3);
        std::size_t const g = 1 + gen.Index(4);
        std::size_t const generations = (m - 1) * g + 1 + gen.Index(6);
        std::size_t const p = 2 + gen.Index(5);
        std::size_t const k = 1 + gen.Index(p);
        auto const cfg = SmallConfig(m, g, generations, p, k, gen.Index(1000));
        auto const result = LayeredEA(cfg, data).Run();
        auto const& trace = result.trace;
        auto const sizes = trace.Header().sampleSizes;

        std::map<std::size_t, std::size_t> shutdownAt;
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> perCycle; // (layer, cycle) -> evaluations
        for (auto const& e : trace.Events()) {
            if (auto const* s = std::get_if<ShutdownEvent>(&e)) { shutdownAt[s->layer] = s->generation; }
            if (auto const* r = std::get_if<EvalRecord>(&e)) {
                ASSERT_EQ(r->sampleSize, sizes[r->layer - 1]);
                ASSERT_FALSE(shutdownAt.contains(r->layer)) << "evaluation after shutdown";
                ++perCycle[{ r->layer, (r->generation - 1) / g }];
            }
            if (auto const* s = std::get_if<SelectionEvent>(&e)) {
                ASSERT_EQ(s->sampleSize, sizes[s->layer - 1]);
                ASSERT_EQ(s->output, p);
            }
        }
        for (auto const& [key, n] : perCycle) {
            std::size_t const exponent = m - key.first + 1;
            ASSERT_LE(n, std::min<std::size_t>(std::size_t { 1 } << exponent, g) * p);
        }
        if (result.bestLayer == m) {
            auto const fit = *result.best.GetFitness();
            bool found = false;
            for (auto const& r : trace.Evaluations()) {
                found |= r.sampleSize == data.Instances() && r.score == fit.score && r.length == fit.length;
            }
            ASSERT_TRUE(found);
        }
        auto const curve = BestSoFar(trace, TimeAxis::Generations);
        for (std::size_t i = 1; i < curve.size(); ++i) { ASSERT_GE(curve[i].value, curve[i - 1].value); }
    }
}

TEST(LayeredEA, WallClockBudgetStops)
{
    auto const data = test::SeparableBlobs(64);
    auto cfg = SmallConfig(2, 2, 1, 4, 2);
    cfg.budget = { std::nullopt, 0.5 };
    cfg.timing = true;
    auto const start = Clock::now();
    auto const r = LayeredEA(cfg, data).Run();
    EXPECT_LT(std::chrono::duration<double>(Clock::now() - start).count(), 5.0);
    EXPECT_TRUE(r.trace.HasTiming());
    EXPECT_TRUE(EventsOf<ShutdownEvent>(r.trace).empty());
}
