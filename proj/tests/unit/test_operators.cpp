#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace ltpot;

namespace {

Dataset MixedData(std::size_t n, int classes, std::uint64_t seed)
{
    SynthConfig cfg;
    cfg.instances = n;
    cfg.features = 5;
    cfg.classes = classes;
    cfg.seed = seed;
    return GenerateDataset(cfg);
}

// Every value combination of an operator's hyperparameters.
std::vector<Primitive> AllSettings(Registry const& reg, std::size_t op)
{
    std::vector<Primitive> out { Primitive { op, {} } };
    for (auto const& hp : reg.Op(op).hyperparams) {
        std::vector<Primitive> next;
        for (auto const& p : out) {
            for (std::size_t v = 0; v < hp.values.size(); ++v) {
                auto q = p;
                q.values.push_back(v);
                next.push_back(q);
            }
        }
        out = std::move(next);
    }
    return out;
}

// Records the training matrix it is fit on and predicts from the first
// column, so tests can observe what the preprocessors produced.
struct Spy {
    static inline std::vector<Matrix> seen;
};

class SpyClassifier final : public Classifier {
public:
    void Fit(Matrix const& x, std::span<int const> /*y*/, int classes, Deadline const& /*deadline*/) override
    {
        Spy::seen.push_back(x);
        classes_ = classes;
    }

    [[nodiscard]] Matrix PredictProba(Matrix const& x, Deadline const& /*deadline*/) const override
    {
        Matrix p(x.Rows(), static_cast<std::size_t>(classes_), 1.0 / classes_);
        return p;
    }

private:
    int classes_ { 2 };
};

Registry SpyRegistry()
{
    auto ops = StandardOperators();
    ops.push_back({ "Spy", OperatorKind::Classifier, {}, {}, [](auto) { return std::make_unique<SpyClassifier>(); } });
    return Registry(std::move(ops));
}

} // namespace

TEST(Classifiers, ProbabilitiesSumToOne)
{
    auto const& reg = StandardRegistry();
    for (int classes : { 2, 3 }) {
        auto const data = MixedData(90, classes, 7 + static_cast<std::uint64_t>(classes));
        RngStream rng(1, "proba");
        auto const plan = KFoldPlan(FullView(data), 3, rng);
        Matrix const train = data.Features().SelectRows(plan[0].train);
        Matrix const test = data.Features().SelectRows(plan[0].test);
        std::vector<int> y;
        for (auto r : plan[0].train) { y.push_back(data.Labels()[r]); }
        for (auto op : reg.Classifiers()) {
            for (auto const& p : AllSettings(reg, op)) {
                auto clf = reg.Op(op).makeClassifier(detail::HyperparamNumbers(reg, p));
                clf->Fit(train, y, classes, Deadline {});
                auto const proba = clf->PredictProba(test, Deadline {});
                ASSERT_EQ(proba.Rows(), test.Rows());
                ASSERT_EQ(proba.Cols(), static_cast<std::size_t>(classes));
                for (std::size_t r = 0; r < proba.Rows(); ++r) {
                    double sum = 0.0;
                    for (double v : proba.Row(r)) {
                        ASSERT_GE(v, 0.0);
                        sum += v;
                    }
                    ASSERT_NEAR(sum, 1.0, 1e-9) << reg.Op(op).name;
                }
            }
        }
    }
}

TEST(Classifiers, SeparableBlobsArePerfect)
{
    auto const data = test::SeparableBlobs(60, 4);
    RngStream rng(2, "blobs");
    auto const plan = KFoldPlan(FullView(data), 3, rng);
    for (auto const* text : { "GaussianNB(INPUT)", "DecisionTree(INPUT, max_depth=3, min_samples_split=2)",
             "KNN(INPUT, k=5, weighting=uniform)", "LogisticRegression(INPUT, l2=1.0, iterations=100)" }) {
        auto const res = EvaluateOnFolds(test::Parse(text), data, plan, Deadline {});
        ASSERT_EQ(res.outcome, Outcome::Ok) << text << ": " << res.error;
        EXPECT_EQ(res.score, 1.0) << text;
    }
}

TEST(Preprocessors, ShapesAndBasicStatistics)
{
    Matrix x(4, 2);
    double const raw[4][2] = { { 1, 5 }, { 3, 5 }, { 5, 5 }, { 7, 5 } };
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 2; ++c) { x(r, c) = raw[r][c]; }
    }
    StandardScaler ss;
    ss.Fit(x, Deadline {});
    auto const z = ss.Transform(x);
    EXPECT_NEAR(z(0, 0) + z(3, 0), 0.0, 1e-12);
    EXPECT_NEAR(z(1, 1), 0.0, 1e-12);

    MinMaxScaler mm;
    mm.Fit(x, Deadline {});
    auto const m = mm.Transform(x);
    EXPECT_EQ(m(0, 0), 0.0);
    EXPECT_EQ(m(3, 0), 1.0);

    VarianceThreshold vt(0.0);
    vt.Fit(x, Deadline {});
    EXPECT_EQ(vt.Transform(x).Cols(), 1U);

    Binarizer bz(4.0);
    bz.Fit(x, Deadline {});
    auto const b = bz.Transform(x);
    EXPECT_EQ(b(1, 0), 0.0);
    EXPECT_EQ(b(2, 0), 1.0);
}

// Permuting and perturbing test-fold rows must leave everything fit on the
// training rows unchanged: the classifier sees the same transformed matrix.
TEST(Preprocessors, NoLeakageFromTestRows)
{
    auto const reg = SpyRegistry();
    auto const base = MixedData(60, 2, 11);
    RngStream rng(3, "leak");
    auto const plan = KFoldPlan(FullView(base), 3, rng);
    for (auto op : reg.Preprocessors()) {
        for (auto const& p : AllSettings(reg, op)) {
            PipelineTree const tree(reg, { DefaultPrimitive(reg, "Spy"), p });
            for (auto const& fold : plan) {
                Spy::seen.clear();
                FitAndScore(tree, base, fold, Deadline {});

                Matrix x = base.Features();
                std::vector<int> y = base.Labels();
                auto perm = fold.test;
                rng.Shuffle(std::span(perm));
                for (std::size_t t = 0; t < fold.test.size(); ++t) {
                    for (std::size_t c = 0; c < x.Cols(); ++c) {
                        x(fold.test[t], c) = 10.0 * base.Features()(perm[t], c) + 3.0;
                    }
                    y[fold.test[t]] = base.Labels()[perm[t]];
                }
                Dataset const shuffled("shuffled", std::move(x), std::move(y), 2);
                FitAndScore(tree, shuffled, fold, Deadline {});
                ASSERT_EQ(Spy::seen.size(), 2U);
                ASSERT_EQ(Spy::seen[0], Spy::seen[1]) << reg.Op(op).name;
            }
        }
    }
}

// A classifier's prediction for one test row may not depend on the others.
TEST(Classifiers, PredictionsArePerRow)
{
    auto const& reg = StandardRegistry();
    auto const data = MixedData(60, 3, 13);
    RngStream rng(4, "rows");
    auto const plan = KFoldPlan(FullView(data), 3, rng);
    Matrix const train = data.Features().SelectRows(plan[0].train);
    std::vector<int> y;
    for (auto r : plan[0].train) { y.push_back(data.Labels()[r]); }
    auto test = plan[0].test;
    auto perm = test;
    rng.Shuffle(std::span(perm));
    Matrix const a = data.Features().SelectRows(test);
    Matrix const b = data.Features().SelectRows(perm);
    for (auto op : reg.Classifiers()) {
        auto clf = reg.Op(op).makeClassifier(detail::HyperparamNumbers(reg, DefaultPrimitive(reg, reg.Op(op).name)));
        clf->Fit(train, y, 3, Deadline {});
        auto const pa = clf->PredictProba(a, Deadline {});
        auto const pb = clf->PredictProba(b, Deadline {});
        for (std::size_t i = 0; i < perm.size(); ++i) {
            std::size_t const j = static_cast<std::size_t>(std::find(test.begin(), test.end(), perm[i]) - test.begin());
            for (std::size_t c = 0; c < 3; ++c) { ASSERT_EQ(pb(i, c), pa(j, c)) << reg.Op(op).name; }
        }
    }
}
