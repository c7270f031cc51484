#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "core.hpp"
#include "registry.hpp"

namespace ltpot {

// One primitive: an operator plus one value index per declared hyperparameter.
struct Primitive {
    std::size_t op { 0 };
    std::vector<std::size_t> values;

    friend bool operator==(Primitive const&, Primitive const&) = default;
};

// A pipeline as a chain-shaped tree. Chain()[0] is the classifier root; each
// following primitive is the data input of the one before it, and the last one
// reads the dataset input terminal. Preprocessors therefore run from the back
// of the chain towards the front.
class PipelineTree {
public:
    PipelineTree(Registry const& registry, std::vector<Primitive> chain)
        : registry_(&registry)
        , chain_(std::move(chain))
    {
    }

    [[nodiscard]] Registry const& Grammar() const { return *registry_; }
    [[nodiscard]] std::span<Primitive const> Chain() const { return chain_; }
    [[nodiscard]] Primitive const& Root() const { return chain_.front(); }

    friend bool operator==(PipelineTree const& a, PipelineTree const& b)
    {
        return a.registry_ == b.registry_ && a.chain_ == b.chain_;
    }

private:
    Registry const* registry_;
    std::vector<Primitive> chain_;
};

// Number of primitive nodes; terminals are not counted.
inline std::size_t PipelineLength(PipelineTree const& tree)
{
    return tree.Chain().size();
}

inline std::string CanonicalForm(PipelineTree const& tree)
{
    auto const& reg = tree.Grammar();
    auto chain = tree.Chain();
    std::string out = "INPUT";
    for (std::size_t i = chain.size(); i-- > 0;) {
        auto const& spec = reg.Op(chain[i].op);
        std::string next = fmt::format("{}({}", spec.name, out);
        for (std::size_t h = 0; h < spec.hyperparams.size(); ++h) {
            auto const& dom = spec.hyperparams[h];
            fmt::format_to(std::back_inserter(next), ", {}={}", dom.name, dom.values[chain[i].values[h]].text);
        }
        next += ')';
        out = std::move(next);
    }
    return out;
}

struct Violation {
    std::string invariant;
    std::optional<std::size_t> node; // chain position, root = 0
    std::string message;
};

// Empty result means the tree satisfies every structural invariant.
inline std::vector<Violation> ValidateTree(PipelineTree const& tree)
{
    std::vector<Violation> out;
    auto const& reg = tree.Grammar();
    auto chain = tree.Chain();
    if (chain.empty()) {
        out.push_back({ "empty pipeline", std::nullopt, "pipeline has no primitives" });
        return out;
    }
    if (chain.size() > reg.MaxPipelineLength()) {
        out.push_back({ "length cap", std::nullopt,
            fmt::format("pipeline has {} primitives, cap is {}", chain.size(), reg.MaxPipelineLength()) });
    }
    for (std::size_t i = 0; i < chain.size(); ++i) {
        auto const& p = chain[i];
        if (p.op >= reg.Size()) {
            out.push_back({ "unknown operator", i, fmt::format("operator id {} is not registered", p.op) });
            continue;
        }
        auto const& spec = reg.Op(p.op);
        if (i == 0 && spec.kind != OperatorKind::Classifier) {
            out.push_back({ "root kind", i, fmt::format("root '{}' is not a classifier", spec.name) });
        }
        if (i > 0 && spec.kind != OperatorKind::Preprocessor) {
            out.push_back({ "non-root kind", i, fmt::format("classifier '{}' in non-root position", spec.name) });
        }
        if (p.values.size() != spec.hyperparams.size()) {
            out.push_back({ "hyperparameter arity", i,
                fmt::format("'{}' carries {} terminals, expected {}", spec.name, p.values.size(), spec.hyperparams.size()) });
            continue;
        }
        for (std::size_t h = 0; h < p.values.size(); ++h) {
            if (p.values[h] >= spec.hyperparams[h].values.size()) {
                out.push_back({ "hyperparameter domain", i,
                    fmt::format("{}.{} value index {} outside domain", spec.name, spec.hyperparams[h].name, p.values[h]) });
            }
        }
    }
    return out;
}

namespace detail {
    class PipelineParser {
    public:
        PipelineParser(Registry const& reg, std::string_view text)
            : reg_(reg)
            , text_(text)
        {
        }

        PipelineTree Parse()
        {
            std::vector<Primitive> reversed;
            ParseExpr(reversed, 0);
            SkipSpace();
            if (pos_ != text_.size()) { Fail("trailing characters"); }
            std::vector<Primitive> chain(reversed.rbegin(), reversed.rend());
            PipelineTree tree(reg_, std::move(chain));
            if (PipelineLength(tree) > reg_.MaxPipelineLength()) {
                throw ParseError(fmt::format("pipeline has {} primitives, cap is {}", PipelineLength(tree), reg_.MaxPipelineLength()));
            }
            return tree;
        }

    private:
        // Appends primitives innermost-first.
        void ParseExpr(std::vector<Primitive>& out, std::size_t depth)
        {
            auto const start = pos_;
            auto const name = Identifier();
            auto id = reg_.Find(name);
            if (!id) { throw ParseError(fmt::format("unknown operator '{}' at offset {}", name, start)); }
            auto const& spec = reg_.Op(*id);
            if (depth == 0 && spec.kind != OperatorKind::Classifier) {
                throw ParseError(fmt::format("root operator '{}' must be a classifier", name));
            }
            if (depth > 0 && spec.kind != OperatorKind::Preprocessor) {
                throw ParseError(fmt::format("classifier '{}' appears in non-root position", name));
            }
            Expect('(');
            SkipSpace();
            auto const save = pos_;
            if (Identifier() != "INPUT") {
                pos_ = save;
                ParseExpr(out, depth + 1);
            }

            Primitive prim { *id, std::vector<std::size_t>(spec.hyperparams.size(), kUnset) };
            SkipSpace();
            while (Peek() == ',') {
                ++pos_;
                auto const key = Identifier();
                Expect('=');
                auto const value = Value();
                std::size_t h = 0;
                while (h < spec.hyperparams.size() && spec.hyperparams[h].name != key) { ++h; }
                if (h == spec.hyperparams.size()) {
                    throw ParseError(fmt::format("'{}' has no hyperparameter '{}'", name, key));
                }
                if (prim.values[h] != kUnset) {
                    throw ParseError(fmt::format("hyperparameter {}.{} given twice", name, key));
                }
                prim.values[h] = MatchValue(spec.hyperparams[h], value, name);
                SkipSpace();
            }
            Expect(')');
            for (std::size_t h = 0; h < prim.values.size(); ++h) {
                if (prim.values[h] == kUnset) {
                    throw ParseError(fmt::format("missing hyperparameter {}.{}", name, spec.hyperparams[h].name));
                }
            }
            out.push_back(std::move(prim));
        }

        static std::size_t MatchValue(HyperparamDomain const& dom, std::string_view value, std::string_view op)
        {
            for (std::size_t i = 0; i < dom.values.size(); ++i) {
                if (dom.values[i].text == value) { return i; }
            }
            double number = 0.0;
            auto const* end = value.data() + value.size();
            auto [ptr, ec] = std::from_chars(value.data(), end, number);
            if (ec == std::errc() && ptr == end) {
                for (std::size_t i = 0; i < dom.values.size(); ++i) {
                    if (dom.values[i].number == number && !std::isalpha(static_cast<unsigned char>(dom.values[i].text.front()))) { return i; }
                }
            }
            throw ParseError(fmt::format("value '{}' outside the domain of {}.{}", value, op, dom.name));
        }

        std::string_view Identifier()
        {
            SkipSpace();
            auto const start = pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) { ++pos_; }
            if (start == pos_) { Fail("expected identifier"); }
            return text_.substr(start, pos_ - start);
        }

        std::string_view Value()
        {
            SkipSpace();
            auto const start = pos_;
            while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ')' && !std::isspace(static_cast<unsigned char>(text_[pos_]))) { ++pos_; }
            if (start == pos_) { Fail("expected value"); }
            return text_.substr(start, pos_ - start);
        }

        void Expect(char c)
        {
            SkipSpace();
            if (Peek() != c) { Fail(fmt::format("expected '{}'", c)); }
            ++pos_;
        }

        [[nodiscard]] char Peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

        void SkipSpace()
        {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) { ++pos_; }
        }

        [[noreturn]] void Fail(std::string const& what) const
        {
            throw ParseError(fmt::format("syntax error at offset {}: {}", pos_, what));
        }

        static constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
        Registry const& reg_;
        std::string_view text_;
        std::size_t pos_ { 0 };
    };
} // namespace detail

// Inverse of CanonicalForm. Hyperparameters may appear in any order but each
// exactly once; numeric values are matched by value if not by spelling.
inline PipelineTree ParsePipeline(Registry const& registry, std::string_view text)
{
    return detail::PipelineParser(registry, text).Parse();
}

// Primitive with default hyperparameter values.
inline Primitive DefaultPrimitive(Registry const& registry, std::string_view name)
{
    auto id = registry.Find(name);
    if (!id) { throw ParseError(fmt::format("unknown operator '{}'", name)); }
    Primitive p { *id, {} };
    for (auto const& hp : registry.Op(*id).hyperparams) { p.values.push_back(hp.defaultIndex); }
    return p;
}

struct Fitness {
    double score { 0.0 };   // maximized
    std::size_t length { 1 }; // minimized

    friend bool operator==(Fitness const&, Fitness const&) = default;
};

enum class EvalStatus { Unevaluated, Evaluated, Failed };

// A pipeline with its evaluation state. Fitness is present exactly when the
// status is Evaluated.
class Individual {
public:
    explicit Individual(PipelineTree tree)
        : tree_(std::move(tree))
    {
    }

    [[nodiscard]] PipelineTree const& Tree() const { return tree_; }
    [[nodiscard]] EvalStatus Status() const { return status_; }
    [[nodiscard]] std::optional<Fitness> const& GetFitness() const { return fitness_; }
    [[nodiscard]] double Auroc() const { return auroc_; }

    void MarkEvaluated(double score, double auroc)
    {
        status_ = EvalStatus::Evaluated;
        fitness_ = Fitness { score, PipelineLength(tree_) };
        auroc_ = auroc;
    }

    void MarkFailed()
    {
        status_ = EvalStatus::Failed;
        fitness_.reset();
        auroc_ = 0.0;
    }

    // Copy with evaluation state cleared.
    [[nodiscard]] Individual Fresh() const { return Individual(tree_); }

private:
    PipelineTree tree_;
    std::optional<Fitness> fitness_;
    EvalStatus status_ { EvalStatus::Unevaluated };
    double auroc_ { 0.0 };
};

} // namespace ltpot
