#pragma once

#include <string>
#include <vector>

#include "ltpot/ltpot.hpp"

namespace ltpot::test {

// Two Gaussian blobs at -5 and +5 on feature 0 (sigma 0.5), plus a noise column.
inline Dataset SeparableBlobs(std::size_t n = 60, std::uint64_t seed = 1)
{
    RngStream rng(seed, "blobs");
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = static_cast<int>(r % 2);
        x(r, 0) = (y[r] == 0 ? -5.0 : 5.0) + 0.5 * rng.Normal();
        x(r, 1) = rng.Normal();
    }
    return { "blobs", std::move(x), std::move(y), 2 };
}

inline Dataset FromLabels(std::vector<int> labels, int classes, std::size_t features = 2, std::uint64_t seed = 3)
{
    RngStream rng(seed, "from-labels");
    Matrix x(labels.size(), features);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        for (std::size_t j = 0; j < features; ++j) { x(r, j) = rng.Normal() + labels[r]; }
    }
    return { "labels", std::move(x), std::move(labels), classes };
}

inline PipelineTree Parse(std::string const& text)
{
    return ParsePipeline(StandardRegistry(), text);
}

inline std::vector<PipelineTree> RandomTrees(std::size_t n, std::uint64_t seed)
{
    RngStream rng(seed, "random-trees");
    std::vector<PipelineTree> out;
    for (std::size_t i = 0; i < n; ++i) { out.push_back(RandomTree(StandardRegistry(), rng)); }
    return out;
}

inline Individual Evaluated(PipelineTree tree, double score, double auroc = 0.5)
{
    Individual ind(std::move(tree));
    ind.MarkEvaluated(score, auroc);
    return ind;
}

} // namespace ltpot::test
