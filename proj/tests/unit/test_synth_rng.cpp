#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace ltpot;

TEST(RngStream, SameSeedAndLabelReplay)
{
    RngStream a(42, "x");
    RngStream b(42, "x");
    RngStream c(42, "y");
    RngStream d(43, "x");
    bool differsC = false;
    bool differsD = false;
    for (int i = 0; i < 100; ++i) {
        auto const va = a();
        ASSERT_EQ(va, b());
        differsC |= va != c();
        differsD |= va != d();
    }
    EXPECT_TRUE(differsC);
    EXPECT_TRUE(differsD);
}

TEST(RngStream, SubstreamIgnoresParentPosition)
{
    RngStream a(7, "root");
    RngStream const b(7, "root");
    for (int i = 0; i < 50; ++i) { a(); }
    auto sa = a.Substream("child");
    auto sb = b.Substream("child");
    for (int i = 0; i < 20; ++i) { ASSERT_EQ(sa(), sb()); }
    auto other = b.Substream("sibling");
    auto again = b.Substream("child");
    EXPECT_NE(other(), again());
}

TEST(RngStream, IndexIsUniform)
{
    RngStream rng(3, "index");
    for (std::size_t n : { 1, 2, 3, 7, 10 }) {
        std::vector<double> counts(n, 0.0);
        std::size_t const draws = 20000;
        for (std::size_t i = 0; i < draws; ++i) {
            auto const v = rng.Index(n);
            ASSERT_LT(v, n);
            counts[v] += 1.0;
        }
        double const expected = static_cast<double>(draws) / static_cast<double>(n);
        double chi2 = 0.0;
        for (double c : counts) { chi2 += (c - expected) * (c - expected) / expected; }
        // Far beyond the 0.999 quantile for up to 9 degrees of freedom.
        EXPECT_LT(chi2, 30.0) << "n=" << n;
    }
}

TEST(RngStream, UniformAndNormalMoments)
{
    RngStream rng(4, "moments");
    std::size_t const n = 40000;
    double su = 0.0;
    double sn = 0.0;
    double sn2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double const u = rng.Uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        double const z = rng.Normal();
        sn += z;
        sn2 += z * z;
    }
    double const dn = static_cast<double>(n);
    // Five standard errors.
    EXPECT_NEAR(su / dn, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / dn));
    EXPECT_NEAR(sn / dn, 0.0, 5.0 / std::sqrt(dn));
    EXPECT_NEAR(sn2 / dn, 1.0, 5.0 * std::sqrt(2.0 / dn));
}

TEST(RngStream, ShuffleIsAPermutation)
{
    RngStream rng(5, "shuffle");
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    rng.Shuffle(std::span(w));
    EXPECT_NE(w, v);
    std::sort(w.begin(), w.end());
    EXPECT_EQ(w, v);
}

TEST(GenerateDataset, ShapeAndDeterminism)
{
    for (auto kind : { SynthKind::Blobs, SynthKind::Xor, SynthKind::Mixed }) {
        SynthConfig cfg;
        cfg.kind = kind;
        cfg.instances = 500;
        cfg.features = 6;
        cfg.informative = 3;
        cfg.classes = 3;
        cfg.seed = 8;
        auto const a = GenerateDataset(cfg);
        EXPECT_EQ(a.Instances(), 500U);
        EXPECT_EQ(a.FeatureCount(), 6U);
        EXPECT_EQ(a.Classes(), 3);
        for (auto c : a.ClassCounts()) { EXPECT_GT(c, 20U); }
        auto const b = GenerateDataset(cfg);
        EXPECT_EQ(a.Features(), b.Features());
        EXPECT_EQ(a.Labels(), b.Labels());
        cfg.seed = 9;
        EXPECT_NE(GenerateDataset(cfg).Labels(), a.Labels());
    }
}

TEST(GenerateDataset, XorFollowsSignRule)
{
    SynthConfig cfg;
    cfg.kind = SynthKind::Xor;
    cfg.instances = 300;
    cfg.informative = 2;
    cfg.features = 4;
    cfg.labelNoise = 0.0;
    auto const d = GenerateDataset(cfg);
    for (std::size_t r = 0; r < d.Instances(); ++r) {
        int const positives = (d.Features()(r, 0) > 0.0 ? 1 : 0) + (d.Features()(r, 1) > 0.0 ? 1 : 0);
        ASSERT_EQ(d.Labels()[r], positives % 2);
    }
}

TEST(GenerateDataset, WellSeparatedBlobsAreLearnable)
{
    SynthConfig cfg;
    cfg.instances = 300;
    cfg.separation = 8.0;
    cfg.labelNoise = 0.0;
    cfg.seed = 2;
    auto const d = GenerateDataset(cfg);
    Evaluator ev;
    auto const r = ev.Evaluate(test::Parse("GaussianNB(INPUT)"), FullView(d), 3, 30.0, RngStream(1, "f"));
    ASSERT_EQ(r.outcome, Outcome::Ok);
    EXPECT_GT(r.score, 0.95);
}

TEST(GenerateDataset, Errors)
{
    SynthConfig cfg;
    cfg.classes = 1;
    EXPECT_THROW(GenerateDataset(cfg), ConfigError);
    cfg.classes = 2;
    cfg.informative = 9;
    EXPECT_THROW(GenerateDataset(cfg), ConfigError);
    EXPECT_THROW(ParseSynthKind("spiral"), ConfigError);
    EXPECT_EQ(ParseSynthKind("xor"), SynthKind::Xor);
}
