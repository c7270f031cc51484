#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "core.hpp"
#include "dataset.hpp"
#include "rng.hpp"

namespace ltpot {

enum class SynthKind {
    Blobs, // one Gaussian cluster per class
    Xor,   // class from the sign pattern of the informative features
    Mixed, // linear score plus a pairwise interaction, quantized into classes
};

inline SynthKind ParseSynthKind(std::string const& s)
{
    if (s == "blobs") { return SynthKind::Blobs; }
    if (s == "xor") { return SynthKind::Xor; }
    if (s == "mixed") { return SynthKind::Mixed; }
    throw ConfigError(fmt::format("unknown generator '{}' (expected blobs, xor or mixed)", s));
}

struct SynthConfig {
    SynthKind kind { SynthKind::Blobs };
    std::size_t instances { 1000 };
    std::size_t features { 8 };
    std::size_t informative { 2 }; // the rest are pure noise
    int classes { 2 };
    double separation { 2.0 };     // distance scale between class structures
    double labelNoise { 0.05 };    // probability of replacing a label uniformly
    std::uint64_t seed { 0 };
    std::string name { "synthetic" };
};

inline Dataset GenerateDataset(SynthConfig const& cfg)
{
    if (cfg.classes < 2) { throw ConfigError("generator needs at least two classes"); }
    if (cfg.features == 0 || cfg.informative == 0 || cfg.informative > cfg.features) {
        throw ConfigError(fmt::format("need 1 <= informative ({}) <= features ({})", cfg.informative, cfg.features));
    }
    if (cfg.labelNoise < 0.0 || cfg.labelNoise > 1.0) { throw ConfigError("label noise must lie in [0, 1]"); }
    auto const c = static_cast<std::size_t>(cfg.classes);
    if (cfg.instances < c) { throw ConfigError("fewer instances than classes"); }

    RngStream rng(cfg.seed, "synth/" + cfg.name);
    auto centerRng = rng.Substream("centers");
    std::vector<std::vector<double>> centers(c, std::vector<double>(cfg.informative));
    for (auto& center : centers) {
        for (auto& v : center) { v = centerRng.Normal() * cfg.separation; }
    }
    auto weightRng = rng.Substream("weights");
    std::vector<double> weights(cfg.informative);
    for (auto& w : weights) { w = weightRng.Normal(); }

    Matrix x(cfg.instances, cfg.features);
    std::vector<int> y(cfg.instances);
    for (std::size_t r = 0; r < cfg.instances; ++r) {
        int label = 0;
        switch (cfg.kind) {
        case SynthKind::Blobs: {
            // Round-robin class assignment keeps every class populated.
            label = static_cast<int>(r % c);
            for (std::size_t j = 0; j < cfg.informative; ++j) { x(r, j) = centers[static_cast<std::size_t>(label)][j] + rng.Normal(); }
            break;
        }
        case SynthKind::Xor: {
            std::size_t cell = 0;
            for (std::size_t j = 0; j < cfg.informative; ++j) {
                double const v = rng.Uniform(-cfg.separation, cfg.separation);
                x(r, j) = v;
                cell += v > 0.0 ? 1 : 0;
            }
            label = static_cast<int>(cell % c);
            break;
        }
        case SynthKind::Mixed: {
            double score = 0.0;
            for (std::size_t j = 0; j < cfg.informative; ++j) {
                x(r, j) = rng.Normal();
                score += weights[j] * x(r, j);
            }
            if (cfg.informative >= 2) { score += cfg.separation * x(r, 0) * x(r, 1); }
            // Quantize through a squashing map so classes are roughly balanced.
            double const u = 0.5 * (1.0 + std::erf(score / std::sqrt(2.0 * (1.0 + cfg.separation * cfg.separation))));
            label = std::min(static_cast<int>(u * static_cast<double>(c)), cfg.classes - 1);
            break;
        }
        }
        for (std::size_t j = cfg.informative; j < cfg.features; ++j) { x(r, j) = rng.Normal(); }
        if (rng.Bernoulli(cfg.labelNoise)) { label = static_cast<int>(rng.Index(c)); }
        y[r] = label;
    }
    return Dataset(cfg.name, std::move(x), std::move(y), cfg.classes);
}

} // namespace ltpot
