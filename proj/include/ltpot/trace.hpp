#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "evaluate.hpp"

namespace ltpot {

using Json = nlohmann::ordered_json;

struct RunHeader {
    std::string method;
    std::string dataset;
    std::uint64_t seed { 0 };
    std::size_t instances { 0 };
    std::size_t layers { 1 };
    std::vector<std::size_t> sampleSizes;
    std::size_t g { 1 };
    std::size_t population { 0 };
    std::size_t k { 0 };
    std::size_t folds { 0 };
    double timeoutSecs { 0.0 };
    std::optional<std::size_t> budgetGenerations;
    std::optional<double> budgetSeconds;
    bool timing { true };
};

struct EvalRecord {
    std::size_t generation { 0 };
    std::size_t layer { 1 };
    std::size_t sampleSize { 0 };
    std::string pipeline;
    std::optional<double> score;
    std::optional<double> auroc;
    std::size_t length { 0 };
    Outcome outcome { Outcome::Failed };
    std::uint64_t seed { 0 };
    bool cached { false };
    std::optional<double> wallTimeMs;
    std::optional<double> elapsedMs; // since run start, at completion
};

struct TransferEvent {
    std::size_t generation;
    std::size_t from;
    std::size_t to;
    std::size_t count;
};

struct ReseedEvent {
    std::size_t generation;
    std::size_t layer;
    std::size_t count;
};

struct ShutdownEvent {
    std::size_t generation;
    std::size_t layer;
};

struct SelectionEvent {
    std::size_t generation;
    std::size_t layer;
    std::size_t sampleSize;
    std::size_t input;
    std::size_t output;
};

using TraceEvent = std::variant<EvalRecord, TransferEvent, ReseedEvent, ShutdownEvent, SelectionEvent>;

// Append-only log of one run.
class RunTrace {
public:
    RunTrace() = default;
    explicit RunTrace(RunHeader header)
        : header_(std::move(header))
    {
    }

    [[nodiscard]] RunHeader const& Header() const { return header_; }
    RunHeader& MutableHeader() { return header_; }
    [[nodiscard]] std::vector<TraceEvent> const& Events() const { return events_; }

    void Append(TraceEvent event) { events_.push_back(std::move(event)); }

    [[nodiscard]] std::vector<EvalRecord> Evaluations() const
    {
        std::vector<EvalRecord> out;
        for (auto const& e : events_) {
            if (auto const* r = std::get_if<EvalRecord>(&e)) { out.push_back(*r); }
        }
        return out;
    }

    [[nodiscard]] bool HasTiming() const
    {
        for (auto const& e : events_) {
            if (auto const* r = std::get_if<EvalRecord>(&e); r && !r->elapsedMs) { return false; }
        }
        return header_.timing;
    }

private:
    RunHeader header_;
    std::vector<TraceEvent> events_;
};

namespace detail {
    template <typename T>
    Json Nullable(std::optional<T> const& v)
    {
        return v ? Json(*v) : Json(nullptr);
    }

    inline Outcome ParseOutcome(std::string const& s)
    {
        if (s == "ok") { return Outcome::Ok; }
        if (s == "timed_out") { return Outcome::TimedOut; }
        if (s == "failed") { return Outcome::Failed; }
        throw DataError("trace: unknown outcome '" + s + "'");
    }

    template <typename T>
    std::optional<T> OptionalField(Json const& j, char const* key)
    {
        if (!j.contains(key) || j.at(key).is_null()) { return std::nullopt; }
        return j.at(key).get<T>();
    }
} // namespace detail

inline Json ToJson(RunHeader const& h)
{
    Json j;
    j["type"] = "run";
    j["method"] = h.method;
    j["dataset"] = h.dataset;
    j["seed"] = h.seed;
    j["instances"] = h.instances;
    j["layers"] = h.layers;
    j["sample_sizes"] = h.sampleSizes;
    j["g"] = h.g;
    j["population"] = h.population;
    j["k"] = h.k;
    j["folds"] = h.folds;
    j["timeout_secs"] = h.timeoutSecs;
    j["budget_generations"] = detail::Nullable(h.budgetGenerations);
    j["budget_seconds"] = detail::Nullable(h.budgetSeconds);
    j["timing"] = h.timing;
    return j;
}

inline Json ToJson(TraceEvent const& event)
{
    Json j;
    std::visit([&](auto const& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, EvalRecord>) {
            j["type"] = "eval";
            j["generation"] = e.generation;
            j["layer"] = e.layer;
            j["sample_size"] = e.sampleSize;
            j["pipeline"] = e.pipeline;
            j["score"] = detail::Nullable(e.score);
            j["auroc"] = detail::Nullable(e.auroc);
            j["length"] = e.length;
            if (e.wallTimeMs) { j["wall_time_ms"] = *e.wallTimeMs; }
            if (e.elapsedMs) { j["elapsed_ms"] = *e.elapsedMs; }
            j["outcome"] = OutcomeName(e.outcome);
            j["seed"] = e.seed;
            j["cached"] = e.cached;
        } else if constexpr (std::is_same_v<T, TransferEvent>) {
            j["type"] = "transfer";
            j["generation"] = e.generation;
            j["from"] = e.from;
            j["to"] = e.to;
            j["count"] = e.count;
        } else if constexpr (std::is_same_v<T, ReseedEvent>) {
            j["type"] = "reseed";
            j["generation"] = e.generation;
            j["layer"] = e.layer;
            j["count"] = e.count;
        } else if constexpr (std::is_same_v<T, ShutdownEvent>) {
            j["type"] = "shutdown";
            j["generation"] = e.generation;
            j["layer"] = e.layer;
        } else {
            j["type"] = "selection";
            j["generation"] = e.generation;
            j["layer"] = e.layer;
            j["sample_size"] = e.sampleSize;
            j["input"] = e.input;
            j["output"] = e.output;
        }
    }, event);
    return j;
}

// One JSON object per line: the run header first, then events in order.
inline void WriteJsonl(RunTrace const& trace, std::ostream& out)
{
    out << ToJson(trace.Header()).dump() << '\n';
    for (auto const& e : trace.Events()) { out << ToJson(e).dump() << '\n'; }
}

inline RunTrace ReadJsonl(std::istream& in)
{
    RunTrace trace;
    std::string line;
    bool sawHeader = false;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) { continue; }
        try {
            Json const j = Json::parse(line);
            auto const type = j.at("type").get<std::string>();
            if (type == "run") {
                RunHeader h;
                h.method = j.at("method").get<std::string>();
                h.dataset = j.at("dataset").get<std::string>();
                h.seed = j.at("seed").get<std::uint64_t>();
                h.instances = j.at("instances").get<std::size_t>();
                h.layers = j.at("layers").get<std::size_t>();
                h.sampleSizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
                h.g = j.at("g").get<std::size_t>();
                h.population = j.at("population").get<std::size_t>();
                h.k = j.at("k").get<std::size_t>();
                h.folds = j.at("folds").get<std::size_t>();
                h.timeoutSecs = j.at("timeout_secs").get<double>();
                h.budgetGenerations = detail::OptionalField<std::size_t>(j, "budget_generations");
                h.budgetSeconds = detail::OptionalField<double>(j, "budget_seconds");
                h.timing = j.value("timing", true);
                trace.MutableHeader() = std::move(h);
                sawHeader = true;
            } else if (type == "eval") {
                EvalRecord r;
                r.generation = j.at("generation").get<std::size_t>();
                r.layer = j.at("layer").get<std::size_t>();
                r.sampleSize = j.at("sample_size").get<std::size_t>();
                r.pipeline = j.at("pipeline").get<std::string>();
                r.score = detail::OptionalField<double>(j, "score");
                r.auroc = detail::OptionalField<double>(j, "auroc");
                r.length = j.at("length").get<std::size_t>();
                r.outcome = detail::ParseOutcome(j.at("outcome").get<std::string>());
                r.seed = j.at("seed").get<std::uint64_t>();
                r.cached = j.value("cached", false);
                r.wallTimeMs = detail::OptionalField<double>(j, "wall_time_ms");
                r.elapsedMs = detail::OptionalField<double>(j, "elapsed_ms");
                trace.Append(std::move(r));
            } else if (type == "transfer") {
                trace.Append(TransferEvent { j.at("generation").get<std::size_t>(), j.at("from").get<std::size_t>(),
                    j.at("to").get<std::size_t>(), j.at("count").get<std::size_t>() });
            } else if (type == "reseed") {
                trace.Append(ReseedEvent { j.at("generation").get<std::size_t>(), j.at("layer").get<std::size_t>(), j.at("count").get<std::size_t>() });
            } else if (type == "shutdown") {
                trace.Append(ShutdownEvent { j.at("generation").get<std::size_t>(), j.at("layer").get<std::size_t>() });
            } else if (type == "selection") {
                trace.Append(SelectionEvent { j.at("generation").get<std::size_t>(), j.at("layer").get<std::size_t>(),
                    j.at("sample_size").get<std::size_t>(), j.at("input").get<std::size_t>(), j.at("output").get<std::size_t>() });
            } else {
                throw DataError("trace line " + std::to_string(lineNo) + ": unknown record type '" + type + "'");
            }
        } catch (Json::exception const& e) {
            throw DataError("trace line " + std::to_string(lineNo) + ": " + e.what());
        }
    }
    if (!sawHeader) { throw DataError("trace has no run header"); }
    return trace;
}

} // namespace ltpot
