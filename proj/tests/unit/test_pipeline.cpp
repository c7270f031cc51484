#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace ltpot;
using ltpot::test::Parse;

namespace {

PipelineTree Figure1Tree()
{
    auto const& reg = StandardRegistry();
    return { reg, { DefaultPrimitive(reg, "BernoulliNB"), DefaultPrimitive(reg, "StandardScaler") } };
}

bool HasViolation(std::vector<Violation> const& v, std::string const& name)
{
    return std::any_of(v.begin(), v.end(), [&](auto const& x) { return x.invariant == name; });
}

} // namespace

TEST(Registry, StandardContents)
{
    auto const& reg = StandardRegistry();
    EXPECT_EQ(reg.Classifiers().size(), 5U);
    EXPECT_EQ(reg.Preprocessors().size(), 4U);
    EXPECT_EQ(reg.MaxPipelineLength(), 7U);
    for (auto const* name : { "StandardScaler", "MinMaxScaler", "VarianceThreshold", "Binarizer" }) {
        ASSERT_TRUE(reg.Find(name)) << name;
        EXPECT_EQ(reg.Op(*reg.Find(name)).kind, OperatorKind::Preprocessor);
    }
    for (auto const* name : { "GaussianNB", "BernoulliNB", "DecisionTree", "KNN", "LogisticRegression" }) {
        ASSERT_TRUE(reg.Find(name)) << name;
        EXPECT_EQ(reg.Op(*reg.Find(name)).kind, OperatorKind::Classifier);
    }
    auto const& knn = reg.Op(*reg.Find("KNN"));
    ASSERT_EQ(knn.hyperparams.size(), 2U);
    EXPECT_EQ(knn.hyperparams[0].values.size(), 7U);
    EXPECT_EQ(knn.hyperparams[1].values[1].text, "distance");
    EXPECT_EQ(reg.Op(*reg.Find("DecisionTree")).hyperparams[0].values.size(), 10U);
}

TEST(Registry, RejectsDuplicateNamesAndEmptyDomains)
{
    auto ops = StandardOperators();
    ops.push_back(ops.front());
    EXPECT_THROW(Registry { ops }, ConfigError);

    auto empty = StandardOperators();
    empty[2].hyperparams[0].values.clear();
    EXPECT_THROW(Registry { empty }, ConfigError);
}

TEST(PipelineLength, CountsPrimitives)
{
    EXPECT_EQ(PipelineLength(Parse("BernoulliNB(INPUT, alpha=1.0, binarize=0.0)")), 1U);
    EXPECT_EQ(PipelineLength(Figure1Tree()), 2U);
    EXPECT_EQ(PipelineLength(Parse("GaussianNB(Binarizer(MinMaxScaler(StandardScaler(INPUT)), threshold=0.5))")), 4U);
}

TEST(CanonicalForm, Figure1Shape)
{
    EXPECT_EQ(CanonicalForm(Figure1Tree()), "BernoulliNB(StandardScaler(INPUT), alpha=1.0, binarize=0.0)");
    EXPECT_EQ(CanonicalForm(Figure1Tree()), CanonicalForm(Figure1Tree()));
}

TEST(CanonicalForm, EqualTextIffEqualTrees)
{
    auto const trees = test::RandomTrees(400, 11);
    for (std::size_t i = 0; i < trees.size(); ++i) {
        for (std::size_t j = i; j < trees.size(); j += 7) {
            EXPECT_EQ(trees[i] == trees[j], CanonicalForm(trees[i]) == CanonicalForm(trees[j]));
        }
    }
}

TEST(ParsePipeline, RoundTripsRandomTrees)
{
    for (auto const& t : test::RandomTrees(1000, 5)) {
        auto const text = CanonicalForm(t);
        auto const back = Parse(text);
        EXPECT_EQ(back, t) << text;
        EXPECT_EQ(CanonicalForm(back), text);
    }
}

TEST(ParsePipeline, AcceptsAnyHyperparameterOrderAndNumericSpelling)
{
    auto const a = Parse("KNN(INPUT, weighting=distance, k=3)");
    EXPECT_EQ(CanonicalForm(a), "KNN(INPUT, k=3, weighting=distance)");
    auto const b = Parse("BernoulliNB( StandardScaler( INPUT ) , alpha = 1 , binarize = 0.50 )");
    EXPECT_EQ(CanonicalForm(b), "BernoulliNB(StandardScaler(INPUT), alpha=1.0, binarize=0.5)");
}

TEST(ParsePipeline, Errors)
{
    EXPECT_THROW(Parse("UnknownOp(INPUT)"), ParseError);
    EXPECT_THROW(Parse("GaussianNB(GaussianNB(INPUT))"), ParseError);
    EXPECT_THROW(Parse("StandardScaler(INPUT)"), ParseError);
    EXPECT_THROW(Parse("KNN(INPUT, k=4, weighting=uniform)"), ParseError);
    EXPECT_THROW(Parse("KNN(INPUT, k=3)"), ParseError);
    EXPECT_THROW(Parse("KNN(INPUT, k=3, k=5, weighting=uniform)"), ParseError);
    EXPECT_THROW(Parse("KNN(INPUT, k=3, weighting=uniform, p=2)"), ParseError);
    EXPECT_THROW(Parse("GaussianNB(INPUT"), ParseError);
    EXPECT_THROW(Parse("GaussianNB(INPUT) trailing"), ParseError);
    EXPECT_THROW(Parse("GaussianNB()"), ParseError);
    EXPECT_THROW(Parse(""), ParseError);
    std::string text = "INPUT";
    for (int i = 0; i < 7; ++i) { text = "StandardScaler(" + text + ")"; }
    EXPECT_THROW(Parse("GaussianNB(" + text + ")"), ParseError);
}

TEST(ValidateTree, Figure1IsValid)
{
    EXPECT_TRUE(ValidateTree(Figure1Tree()).empty());
}

TEST(ValidateTree, NamesEachViolation)
{
    auto const& reg = StandardRegistry();
    EXPECT_TRUE(HasViolation(ValidateTree({ reg, {} }), "empty pipeline"));

    std::vector<Primitive> chain { DefaultPrimitive(reg, "GaussianNB") };
    for (std::size_t i = 0; i < reg.MaxPipelineLength(); ++i) { chain.push_back(DefaultPrimitive(reg, "MinMaxScaler")); }
    auto const capped = ValidateTree({ reg, chain });
    EXPECT_TRUE(HasViolation(capped, "length cap"));
    chain.pop_back();
    EXPECT_TRUE(ValidateTree({ reg, chain }).empty());

    auto const rootKind = ValidateTree({ reg, { DefaultPrimitive(reg, "StandardScaler") } });
    ASSERT_TRUE(HasViolation(rootKind, "root kind"));
    EXPECT_EQ(rootKind.front().node, 0U);

    auto const nested = ValidateTree({ reg, { DefaultPrimitive(reg, "GaussianNB"), DefaultPrimitive(reg, "KNN") } });
    ASSERT_TRUE(HasViolation(nested, "non-root kind"));
    EXPECT_EQ(nested.front().node, 1U);

    EXPECT_TRUE(HasViolation(ValidateTree({ reg, { Primitive { 999, {} } } }), "unknown operator"));
    EXPECT_TRUE(HasViolation(ValidateTree({ reg, { Primitive { *reg.Find("KNN"), { 0 } } } }), "hyperparameter arity"));
    EXPECT_TRUE(HasViolation(ValidateTree({ reg, { Primitive { *reg.Find("KNN"), { 0, 9 } } } }), "hyperparameter domain"));
}

TEST(Individual, FitnessPresentIffEvaluated)
{
    Individual ind(Figure1Tree());
    EXPECT_EQ(ind.Status(), EvalStatus::Unevaluated);
    EXPECT_FALSE(ind.GetFitness());
    ind.MarkEvaluated(0.8, 0.9);
    ASSERT_TRUE(ind.GetFitness());
    EXPECT_EQ(ind.GetFitness()->length, 2U);
    EXPECT_DOUBLE_EQ(ind.GetFitness()->score, 0.8);
    auto const fresh = ind.Fresh();
    EXPECT_EQ(fresh.Status(), EvalStatus::Unevaluated);
    EXPECT_FALSE(fresh.GetFitness());
    ind.MarkFailed();
    EXPECT_EQ(ind.Status(), EvalStatus::Failed);
    EXPECT_FALSE(ind.GetFitness());
}
