#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ltpot/ltpot.hpp"

namespace fs = std::filesystem;
using namespace ltpot;

namespace {

struct Options {
    std::string data;
    std::string label { "class" };
    std::uint64_t seed { 0 };
    std::string config;
    std::string out { "." };
    std::optional<std::size_t> budgetGenerations;
    std::optional<double> budgetSeconds;
    std::optional<std::size_t> layers;
    std::optional<std::size_t> g;
    std::optional<std::size_t> pop;
    std::optional<std::size_t> k;
    std::optional<std::size_t> folds;
    std::optional<double> timeoutSecs;
    std::optional<std::size_t> threads;
    std::string method;
    bool traceTiming { false };
    double tieThreshold { 0.1 };
    double intervalSecs { 60.0 };
    std::string axis { "time" };
    std::vector<std::string> traces;
    std::string methodA;
    std::string methodB;
};

LabelColumn ParseLabel(std::string const& label)
{
    if (!label.empty() && label.find_first_not_of("0123456789") == std::string::npos) {
        return static_cast<std::size_t>(std::stoul(label));
    }
    return label;
}

Dataset LoadData(Options const& o)
{
    if (o.data.empty()) { throw ConfigError("--data is required"); }
    return LoadCsv(o.data, ParseLabel(o.label));
}

RunConfig BuildConfig(Options const& o, CLI::App const& cmd)
{
    RunConfig cfg;
    bool timingFromConfig = false;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) { throw ConfigError(fmt::format("cannot open config '{}'", o.config)); }
        Json j;
        try {
            j = Json::parse(in);
        } catch (Json::parse_error const& e) {
            throw ConfigError(fmt::format("config '{}': {}", o.config, e.what()));
        }
        cfg = RunConfigFromJson(j, cfg);
        timingFromConfig = j.contains("trace_timing");
    }
    if (o.budgetGenerations) { cfg.budget = { o.budgetGenerations, std::nullopt }; }
    if (o.budgetSeconds) { cfg.budget = { std::nullopt, o.budgetSeconds }; }
    // Timing fields make traces run-dependent, so generation-mode traces
    // leave them out unless asked.
    if (!timingFromConfig) { cfg.timing = !cfg.budget.GenerationMode(); }
    if (o.traceTiming) { cfg.timing = true; }
    if (o.layers) {
        cfg.layers = *o.layers;
        cfg.sampleSizes.clear();
    }
    if (o.g) { cfg.g = *o.g; }
    if (o.pop) { cfg.population = *o.pop; }
    if (o.k) { cfg.k = *o.k; }
    if (o.folds) { cfg.folds = *o.folds; }
    if (o.timeoutSecs) { cfg.timeoutSecs = *o.timeoutSecs; }
    if (o.threads) { cfg.threads = *o.threads; }
    if (cmd.count("--seed") > 0 || o.config.empty()) { cfg.seed = o.seed; }
    if (!o.method.empty()) { cfg.method = o.method; }
    if (cfg.k > cfg.population && !o.k) { cfg.k = std::max<std::size_t>(1, cfg.population / 2); }
    return cfg;
}

void WriteRunOutputs(RunResult const& result, std::string const& outDir)
{
    fs::create_directories(outDir);
    {
        std::ofstream t(fs::path(outDir) / "trace.jsonl");
        WriteJsonl(result.trace, t);
    }
    std::ofstream s(fs::path(outDir) / "summary.json");
    s << SummaryJson(result).dump(2) << '\n';
    std::cout << SummaryJson(result).dump(2) << '\n';
}

std::vector<RunTrace> LoadTraces(std::vector<std::string> const& paths)
{
    std::vector<fs::path> files;
    for (auto const& p : paths) {
        if (fs::is_directory(p)) {
            for (auto const& e : fs::recursive_directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".jsonl") { files.push_back(e.path()); }
            }
        } else if (fs::is_regular_file(p)) {
            files.emplace_back(p);
        } else {
            throw DataError(fmt::format("no such trace file or directory '{}'", p));
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) { throw DataError("no trace files found"); }
    std::vector<RunTrace> traces;
    for (auto const& f : files) {
        std::ifstream in(f);
        traces.push_back(ReadJsonl(in));
    }
    return traces;
}

TimeAxis ParseAxis(std::string const& s)
{
    if (s == "time") { return TimeAxis::Minutes; }
    if (s == "generation") { return TimeAxis::Generations; }
    throw ConfigError(fmt::format("unknown axis '{}' (expected time or generation)", s));
}

void AddRunFlags(CLI::App* cmd, Options& o)
{
    cmd->add_option("--data", o.data, "CSV dataset with a header row");
    cmd->add_option("--label", o.label, "label column name or 0-based index")->capture_default_str();
    cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    auto* gen = cmd->add_option("--budget-generations", o.budgetGenerations, "stop after this many generations");
    auto* sec = cmd->add_option("--budget-seconds", o.budgetSeconds, "stop after this many seconds");
    gen->excludes(sec);
    cmd->add_option("--layers", o.layers, "number of layers");
    cmd->add_option("--g", o.g, "generations between transfers");
    cmd->add_option("--pop", o.pop, "population size per layer");
    cmd->add_option("--k", o.k, "individuals transferred per layer");
    cmd->add_option("--folds", o.folds, "cross-validation folds");
    cmd->add_option("--timeout-secs", o.timeoutSecs, "per-pipeline time limit on the full dataset");
    cmd->add_option("--threads", o.threads, "evaluation threads");
    cmd->add_option("--method", o.method, "method label written to the trace");
    cmd->add_flag("--trace-timing", o.traceTiming, "record wall-clock fields in generation mode");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Layered evolutionary search for classification pipelines" };
    app.require_subcommand(1);
    Options o;

    auto* run = app.add_subcommand("run", "layered evolutionary search");
    auto* baseline = app.add_subcommand("baseline", "single-layer search on the full dataset");
    auto* random = app.add_subcommand("random", "random search on the full dataset");
    for (auto* cmd : { run, baseline, random }) { AddRunFlags(cmd, o); }

    auto* correlate = app.add_subcommand("correlate", "rank correlation of pipeline scores across sample sizes");
    std::vector<std::string> dataFiles;
    CorrelationConfig corr;
    correlate->add_option("--data", dataFiles, "CSV datasets")->required();
    correlate->add_option("--label", o.label, "label column name or index")->capture_default_str();
    correlate->add_option("--seed", corr.seed, "random seed")->capture_default_str();
    correlate->add_option("--pipelines", corr.pipelines, "random pipelines per dataset")->capture_default_str();
    correlate->add_option("--repeats", corr.repeats, "repetitions of cross-validation")->capture_default_str();
    correlate->add_option("--folds", corr.folds, "cross-validation folds")->capture_default_str();
    correlate->add_option("--fractions", corr.fractions, "sample-size fractions")->capture_default_str();
    correlate->add_option("--timeout-secs", corr.timeoutSecs, "per-pipeline time limit")->capture_default_str();
    correlate->add_option("--threads", corr.threads, "evaluation threads")->capture_default_str();
    correlate->add_option("--out", o.out, "output directory")->capture_default_str();

    auto* rank = app.add_subcommand("rank", "average rank of methods over time");
    rank->add_option("--traces", o.traces, "trace files or directories")->required();
    rank->add_option("--tie-threshold", o.tieThreshold, "AUROC difference treated as a tie")->capture_default_str();
    rank->add_option("--interval-secs", o.intervalSecs, "sampling interval")->capture_default_str();
    rank->add_option("--axis", o.axis, "time or generation")->capture_default_str();
    rank->add_option("--out", o.out, "output directory")->capture_default_str();

    auto* equivalence = app.add_subcommand("equivalence", "time for the better method to match the other's final best");
    equivalence->add_option("--traces", o.traces, "trace files or directories")->required();
    equivalence->add_option("--method-a", o.methodA, "first method (default: first in sorted order)");
    equivalence->add_option("--method-b", o.methodB, "second method (default: second in sorted order)");
    equivalence->add_option("--axis", o.axis, "time or generation")->capture_default_str();
    equivalence->add_option("--out", o.out, "output directory")->capture_default_str();

    auto* gen = app.add_subcommand("gen-data", "write a synthetic classification dataset");
    SynthConfig synth;
    std::string kind = "mixed";
    std::string genOut = "synthetic.csv";
    gen->add_option("--kind", kind, "blobs, xor or mixed")->capture_default_str();
    gen->add_option("--instances", synth.instances, "rows")->capture_default_str();
    gen->add_option("--features", synth.features, "columns")->capture_default_str();
    gen->add_option("--informative", synth.informative, "informative columns")->capture_default_str();
    gen->add_option("--classes", synth.classes, "classes")->capture_default_str();
    gen->add_option("--separation", synth.separation, "class separation scale")->capture_default_str();
    gen->add_option("--label-noise", synth.labelNoise, "label flip probability")->capture_default_str();
    gen->add_option("--seed", synth.seed, "random seed")->capture_default_str();
    gen->add_option("--name", synth.name, "dataset name")->capture_default_str();
    gen->add_option("--out", genOut, "output CSV path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed() || baseline->parsed() || random->parsed()) {
            auto* cmd = run->parsed() ? run : baseline->parsed() ? baseline : random;
            auto const data = LoadData(o);
            auto cfg = BuildConfig(o, *cmd);
            RunResult result = run->parsed() ? LayeredEA(cfg, data).Run()
                : baseline->parsed()         ? SingleLayerBaseline(cfg, data)
                                             : RandomSearchBaseline(cfg, data);
            WriteRunOutputs(result, o.out);
        } else if (correlate->parsed()) {
            std::vector<CorrelationResult> results;
            for (auto const& f : dataFiles) {
                auto const data = LoadCsv(f, ParseLabel(o.label));
                results.push_back(CorrelationExperiment(data, corr));
            }
            fs::create_directories(o.out);
            std::ofstream out(fs::path(o.out) / "correlation.csv");
            WriteCorrelationCsv(results, out);
            WriteCorrelationCsv(results, std::cout);
        } else if (rank->parsed()) {
            auto const traces = LoadTraces(o.traces);
            auto const labeled = LabelTraces(traces);
            auto const axis = ParseAxis(o.axis);
            double const interval = axis == TimeAxis::Minutes ? o.intervalSecs / 60.0 : 1.0;
            auto const series = RankOverTime(labeled, o.tieThreshold, interval, axis);
            fs::create_directories(o.out);
            std::ofstream out(fs::path(o.out) / "rank.csv");
            WriteRankCsv(series, out);
            WriteRankCsv(series, std::cout);
        } else if (equivalence->parsed()) {
            auto const traces = LoadTraces(o.traces);
            auto const labeled = LabelTraces(traces);
            std::set<std::string> methods;
            for (auto const& t : labeled) { methods.insert(t.method); }
            std::vector<std::string> sorted(methods.begin(), methods.end());
            std::string a = o.methodA;
            std::string b = o.methodB;
            if (a.empty() || b.empty()) {
                if (sorted.size() != 2) {
                    throw ConfigError(fmt::format("traces contain {} methods; name two with --method-a and --method-b", sorted.size()));
                }
                a = sorted[0];
                b = sorted[1];
            }
            auto const axis = ParseAxis(o.axis);
            auto const rows = EquivalenceTable(labeled, a, b, axis);
            fs::create_directories(o.out);
            std::ofstream out(fs::path(o.out) / "equivalence.csv");
            WriteEquivalenceCsv(rows, out, axis);
            WriteEquivalenceCsv(rows, std::cout, axis);
        } else if (gen->parsed()) {
            synth.kind = ParseSynthKind(kind);
            auto const data = GenerateDataset(synth);
            if (auto parent = fs::path(genOut).parent_path(); !parent.empty()) { fs::create_directories(parent); }
            WriteCsv(data, genOut);
            std::cout << fmt::format("wrote {} ({} rows, {} features, {} classes)\n", genOut, data.Instances(), data.FeatureCount(), data.Classes());
        }
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
