#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "core.hpp"
#include "operators.hpp"

namespace ltpot {

enum class OperatorKind { Preprocessor, Classifier };

// One member of a hyperparameter's finite domain. `text` is the canonical
// spelling used in pipeline text; `number` is what the operator receives.
struct HyperparamValue {
    std::string text;
    double number;
};

struct HyperparamDomain {
    std::string name;
    std::vector<HyperparamValue> values;
    std::size_t defaultIndex { 0 };
};

using PreprocessorFactory = std::function<std::unique_ptr<Preprocessor>(std::span<double const>)>;
using ClassifierFactory = std::function<std::unique_ptr<Classifier>(std::span<double const>)>;

struct OperatorSpec {
    std::string name;
    OperatorKind kind { OperatorKind::Classifier };
    std::vector<HyperparamDomain> hyperparams;
    PreprocessorFactory makePreprocessor;
    ClassifierFactory makeClassifier;
};

inline constexpr std::size_t kDefaultMaxPipelineLength = 7;

// The operator grammar: which primitives exist, their hyperparameter domains,
// and the maximum number of primitives in a pipeline.
class Registry {
public:
    explicit Registry(std::vector<OperatorSpec> ops, std::size_t maxPipelineLength = kDefaultMaxPipelineLength)
        : ops_(std::move(ops))
        , maxLength_(maxPipelineLength)
    {
        if (maxLength_ < 1) { throw ConfigError("max pipeline length must be at least 1"); }
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            auto const& op = ops_[i];
            if (!byName_.emplace(op.name, i).second) {
                throw ConfigError(fmt::format("duplicate operator name '{}'", op.name));
            }
            for (auto const& hp : op.hyperparams) {
                if (hp.values.empty()) {
                    throw ConfigError(fmt::format("hyperparameter {}.{} has an empty domain", op.name, hp.name));
                }
                if (hp.defaultIndex >= hp.values.size()) {
                    throw ConfigError(fmt::format("hyperparameter {}.{} default is outside its domain", op.name, hp.name));
                }
            }
            if (op.kind == OperatorKind::Classifier) {
                if (!op.makeClassifier) { throw ConfigError(fmt::format("classifier '{}' has no factory", op.name)); }
                classifiers_.push_back(i);
            } else {
                if (!op.makePreprocessor) { throw ConfigError(fmt::format("preprocessor '{}' has no factory", op.name)); }
                preprocessors_.push_back(i);
            }
        }
    }

    [[nodiscard]] std::size_t Size() const { return ops_.size(); }
    [[nodiscard]] OperatorSpec const& Op(std::size_t id) const { return ops_.at(id); }
    [[nodiscard]] std::span<std::size_t const> Classifiers() const { return classifiers_; }
    [[nodiscard]] std::span<std::size_t const> Preprocessors() const { return preprocessors_; }
    [[nodiscard]] std::size_t MaxPipelineLength() const { return maxLength_; }

    [[nodiscard]] std::optional<std::size_t> Find(std::string_view name) const
    {
        auto it = byName_.find(std::string(name));
        if (it == byName_.end()) { return std::nullopt; }
        return it->second;
    }

private:
    std::vector<OperatorSpec> ops_;
    std::size_t maxLength_;
    std::unordered_map<std::string, std::size_t> byName_;
    std::vector<std::size_t> classifiers_;
    std::vector<std::size_t> preprocessors_;
};

namespace detail {
    inline HyperparamDomain Domain(std::string name, std::vector<std::string> const& texts, std::size_t defaultIndex = 0)
    {
        HyperparamDomain d { std::move(name), {}, defaultIndex };
        for (auto const& t : texts) { d.values.push_back({ t, std::stod(t) }); }
        return d;
    }
} // namespace detail

// The built-in operator set.
inline std::vector<OperatorSpec> StandardOperators()
{
    using detail::Domain;
    std::vector<OperatorSpec> ops;

    ops.push_back({ "StandardScaler", OperatorKind::Preprocessor, {},
        [](auto) { return std::make_unique<StandardScaler>(); }, {} });
    ops.push_back({ "MinMaxScaler", OperatorKind::Preprocessor, {},
        [](auto) { return std::make_unique<MinMaxScaler>(); }, {} });
    ops.push_back({ "VarianceThreshold", OperatorKind::Preprocessor,
        { Domain("threshold", { "0.0", "0.05", "0.1", "0.2" }) },
        [](auto hp) { return std::make_unique<VarianceThreshold>(hp[0]); }, {} });
    ops.push_back({ "Binarizer", OperatorKind::Preprocessor,
        { Domain("threshold", { "0.0", "0.25", "0.5", "0.75", "1.0" }) },
        [](auto hp) { return std::make_unique<Binarizer>(hp[0]); }, {} });

    ops.push_back({ "GaussianNB", OperatorKind::Classifier, {}, {},
        [](auto) { return std::make_unique<GaussianNB>(); } });
    ops.push_back({ "BernoulliNB", OperatorKind::Classifier,
        { Domain("alpha", { "0.001", "0.01", "0.1", "1.0", "10.0", "100.0" }, 3),
            Domain("binarize", { "0.0", "0.25", "0.5", "0.75", "1.0" }) },
        {}, [](auto hp) { return std::make_unique<BernoulliNB>(hp[0], hp[1]); } });
    ops.push_back({ "DecisionTree", OperatorKind::Classifier,
        { Domain("max_depth", { "1", "2", "3", "4", "5", "6", "7", "8", "9", "10" }, 4),
            Domain("min_samples_split", { "2", "5", "10", "20" }) },
        {}, [](auto hp) { return std::make_unique<DecisionTree>(static_cast<std::size_t>(hp[0]), static_cast<std::size_t>(hp[1])); } });

    HyperparamDomain weighting { "weighting", { { "uniform", 0.0 }, { "distance", 1.0 } }, 0 };
    ops.push_back({ "KNN", OperatorKind::Classifier,
        { Domain("k", { "1", "3", "5", "7", "11", "15", "21" }, 2), weighting },
        {}, [](auto hp) {
            auto w = hp[1] == 0.0 ? KNearestNeighbors::Weighting::Uniform : KNearestNeighbors::Weighting::Distance;
            return std::make_unique<KNearestNeighbors>(static_cast<std::size_t>(hp[0]), w);
        } });
    ops.push_back({ "LogisticRegression", OperatorKind::Classifier,
        { Domain("l2", { "0.0001", "0.01", "1.0", "100.0" }, 2), Domain("iterations", { "100", "500" }) },
        {}, [](auto hp) { return std::make_unique<LogisticRegression>(hp[0], static_cast<std::size_t>(hp[1])); } });
    return ops;
}

inline Registry const& StandardRegistry()
{
    static Registry const registry(StandardOperators());
    return registry;
}

} // namespace ltpot
