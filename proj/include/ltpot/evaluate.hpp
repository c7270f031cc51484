#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "dataset.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "rng.hpp"

namespace ltpot {

inline constexpr std::size_t kDefaultFolds = 3;

enum class Outcome { Ok, Failed, TimedOut };

inline char const* OutcomeName(Outcome o)
{
    switch (o) {
    case Outcome::Ok: return "ok";
    case Outcome::Failed: return "failed";
    case Outcome::TimedOut: return "timed_out";
    }
    return "failed";
}

struct EvalResult {
    double score { 0.0 };      // mean fold accuracy
    double auroc { 0.0 };      // mean fold AUROC
    std::size_t length { 0 };
    double wallTime { 0.0 };   // seconds
    Outcome outcome { Outcome::Failed };
    std::string error;
    bool cached { false };
};

namespace detail {
    inline std::vector<int> Argmax(Matrix const& proba)
    {
        std::vector<int> out(proba.Rows());
        for (std::size_t r = 0; r < proba.Rows(); ++r) {
            auto row = proba.Row(r);
            out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        }
        return out;
    }

    inline std::vector<double> HyperparamNumbers(Registry const& reg, Primitive const& p)
    {
        auto const& spec = reg.Op(p.op);
        std::vector<double> hp;
        for (std::size_t h = 0; h < p.values.size(); ++h) { hp.push_back(spec.hyperparams[h].values[p.values[h]].number); }
        return hp;
    }
} // namespace detail

struct FoldScore {
    double accuracy;
    double auroc;
};

// Fits the pipeline on the training rows of one fold and scores its test rows.
// Preprocessors see training rows only. Throws on fit/predict errors and
// TimeoutError when the deadline passes.
inline FoldScore FitAndScore(PipelineTree const& tree, Dataset const& data, Fold const& fold, Deadline const& deadline)
{
    auto const& reg = tree.Grammar();
    auto chain = tree.Chain();
    Matrix train = data.Features().SelectRows(fold.train);
    Matrix test = data.Features().SelectRows(fold.test);
    std::vector<int> yTrain;
    std::vector<int> yTest;
    for (auto r : fold.train) { yTrain.push_back(data.Labels()[r]); }
    for (auto r : fold.test) { yTest.push_back(data.Labels()[r]); }

    for (std::size_t i = chain.size(); i-- > 1;) {
        deadline.Check();
        auto pre = reg.Op(chain[i].op).makePreprocessor(detail::HyperparamNumbers(reg, chain[i]));
        pre->Fit(train, deadline);
        train = pre->Transform(train);
        test = pre->Transform(test);
    }
    deadline.Check();
    auto clf = reg.Op(chain[0].op).makeClassifier(detail::HyperparamNumbers(reg, chain[0]));
    clf->Fit(train, yTrain, data.Classes(), deadline);
    Matrix const proba = clf->PredictProba(test, deadline);
    if (proba.Rows() != yTest.size() || proba.Cols() != static_cast<std::size_t>(data.Classes())) {
        throw Error("classifier returned a probability matrix of the wrong shape");
    }
    for (double v : proba.Data()) {
        if (!std::isfinite(v)) { throw Error("classifier produced non-finite probabilities"); }
    }
    return { Accuracy(detail::Argmax(proba), yTest), Auroc(proba, yTest) };
}

// Cross-validates a pipeline over a fixed fold plan. Never throws: errors and
// expiry are reported through the outcome.
inline EvalResult EvaluateOnFolds(PipelineTree const& tree, Dataset const& data, std::span<Fold const> plan, Deadline const& deadline)
{
    EvalResult res;
    res.length = PipelineLength(tree);
    auto const start = Clock::now();
    try {
        double acc = 0.0;
        double auc = 0.0;
        for (auto const& fold : plan) {
            deadline.Check();
            auto const s = FitAndScore(tree, data, fold, deadline);
            acc += s.accuracy;
            auc += s.auroc;
        }
        res.score = acc / static_cast<double>(plan.size());
        res.auroc = auc / static_cast<double>(plan.size());
        res.outcome = Outcome::Ok;
    } catch (TimeoutError const& e) {
        res.outcome = Outcome::TimedOut;
        res.error = e.what();
    } catch (std::exception const& e) {
        res.outcome = Outcome::Failed;
        res.error = e.what();
    }
    res.wallTime = std::chrono::duration<double>(Clock::now() - start).count();
    return res;
}

// Cross-validated evaluation with a memo keyed by (canonical form, subset id,
// fold count). Callers must derive the fold RNG from the subset identity so a
// key always denotes the same fold plan. Safe for concurrent use.
class Evaluator {
public:
    EvalResult Evaluate(PipelineTree const& tree, SubsetView const& subset, std::size_t folds, double timeoutSecs,
        RngStream rng, Deadline const& hardStop = {})
    {
        auto key = std::make_tuple(CanonicalForm(tree), subset.id, folds);
        {
            std::lock_guard lock(mutex_);
            if (auto it = memo_.find(key); it != memo_.end()) {
                auto hit = it->second;
                hit.cached = true;
                hit.wallTime = 0.0;
                return hit;
            }
        }
        EvalResult res;
        try {
            auto const plan = KFoldPlan(subset, folds, rng);
            auto const deadline = Deadline::After(timeoutSecs).Earliest(hardStop);
            res = EvaluateOnFolds(tree, *subset.source, plan, deadline);
        } catch (std::exception const& e) {
            res.length = PipelineLength(tree);
            res.outcome = Outcome::Failed;
            res.error = e.what();
        }
        // A hard stop is the run ending, not the pipeline being slow.
        bool const cutByRun = res.outcome == Outcome::TimedOut && hardStop.Expired();
        if (!cutByRun) {
            std::lock_guard lock(mutex_);
            memo_.emplace(std::move(key), res);
        }
        return res;
    }

    [[nodiscard]] bool Contains(std::string const& form, std::uint64_t subsetId, std::size_t folds) const
    {
        std::lock_guard lock(mutex_);
        return memo_.contains(std::make_tuple(form, subsetId, folds));
    }

    [[nodiscard]] std::size_t CacheSize() const
    {
        std::lock_guard lock(mutex_);
        return memo_.size();
    }

private:
    mutable std::mutex mutex_;
    std::map<std::tuple<std::string, std::uint64_t, std::size_t>, EvalResult> memo_;
};

} // namespace ltpot
