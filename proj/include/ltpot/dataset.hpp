#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "core.hpp"
#include "rng.hpp"

namespace ltpot {

// Instance matrix with integer class labels in [0, classes).
class Dataset {
public:
    Dataset(std::string name, Matrix features, std::vector<int> labels, int classes,
        std::vector<std::string> featureNames = {}, std::vector<std::string> classNames = {}, std::string labelName = "class")
        : name_(std::move(name))
        , features_(std::move(features))
        , labels_(std::move(labels))
        , classes_(classes)
        , featureNames_(std::move(featureNames))
        , classNames_(std::move(classNames))
        , labelName_(std::move(labelName))
    {
        if (labels_.size() != features_.Rows()) {
            throw DataError(fmt::format("{}: {} labels for {} rows", name_, labels_.size(), features_.Rows()));
        }
        if (classes_ < 2) { throw DataError(fmt::format("{}: need at least two classes", name_)); }
        for (double v : features_.Data()) {
            if (!std::isfinite(v)) { throw DataError(fmt::format("{}: non-finite feature value", name_)); }
        }
        counts_.assign(static_cast<std::size_t>(classes_), 0);
        for (int y : labels_) {
            if (y < 0 || y >= classes_) { throw DataError(fmt::format("{}: label {} outside [0, {})", name_, y, classes_)); }
            ++counts_[static_cast<std::size_t>(y)];
        }
        for (std::size_t c = 0; c < counts_.size(); ++c) {
            if (counts_[c] == 0) { throw DataError(fmt::format("{}: class {} has no instances", name_, c)); }
        }
        if (featureNames_.empty()) {
            for (std::size_t j = 0; j < features_.Cols(); ++j) { featureNames_.push_back(fmt::format("x{}", j)); }
        }
        if (classNames_.empty()) {
            for (int c = 0; c < classes_; ++c) { classNames_.push_back(std::to_string(c)); }
        }
    }

    [[nodiscard]] std::string const& Name() const { return name_; }
    [[nodiscard]] Matrix const& Features() const { return features_; }
    [[nodiscard]] std::vector<int> const& Labels() const { return labels_; }
    [[nodiscard]] std::size_t Instances() const { return features_.Rows(); }
    [[nodiscard]] std::size_t FeatureCount() const { return features_.Cols(); }
    [[nodiscard]] int Classes() const { return classes_; }
    [[nodiscard]] std::vector<std::size_t> const& ClassCounts() const { return counts_; }
    [[nodiscard]] std::size_t MinClassCount() const { return *std::min_element(counts_.begin(), counts_.end()); }
    [[nodiscard]] std::vector<std::string> const& FeatureNames() const { return featureNames_; }
    [[nodiscard]] std::vector<std::string> const& ClassNames() const { return classNames_; }
    [[nodiscard]] std::string const& LabelName() const { return labelName_; }

private:
    std::string name_;
    Matrix features_;
    std::vector<int> labels_;
    int classes_;
    std::vector<std::size_t> counts_;
    std::vector<std::string> featureNames_;
    std::vector<std::string> classNames_;
    std::string labelName_;
};

// Label column chosen by header name or by 0-based position.
using LabelColumn = std::variant<std::string, std::size_t>;

namespace detail {
    inline std::vector<std::string> SplitCsvLine(std::string const& line)
    {
        std::vector<std::string> cells;
        std::string cell;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char const ch = line[i];
            if (quoted) {
                if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else if (ch == '"') {
                    quoted = false;
                } else {
                    cell += ch;
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                cells.push_back(std::move(cell));
                cell.clear();
            } else if (ch != '\r') {
                cell += ch;
            }
        }
        cells.push_back(std::move(cell));
        return cells;
    }

    inline std::string Trim(std::string const& s)
    {
        auto const b = s.find_first_not_of(" \t");
        if (b == std::string::npos) { return {}; }
        auto const e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    inline std::optional<double> ParseNumber(std::string const& s)
    {
        double v = 0.0;
        auto const* end = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(s.data(), end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) { return std::nullopt; }
        return v;
    }

    inline std::string QuoteCsv(std::string const& s)
    {
        if (s.find_first_of(",\"\n") == std::string::npos) { return s; }
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') { out += '"'; }
            out += c;
        }
        return out + "\"";
    }
} // namespace detail

// Reads a headed CSV. A feature column is numeric if its first value parses as
// a number, otherwise it is ordinal-encoded by first appearance; labels are
// always encoded by first appearance.
inline Dataset LoadCsv(std::string const& path, LabelColumn const& label)
{
    std::ifstream in(path);
    if (!in) { throw DataError(fmt::format("cannot open '{}'", path)); }
    std::string line;
    if (!std::getline(in, line)) { throw DataError(fmt::format("'{}' is empty", path)); }
    auto header = detail::SplitCsvLine(line);
    for (auto& h : header) { h = detail::Trim(h); }

    std::size_t labelIdx = 0;
    if (auto const* name = std::get_if<std::string>(&label)) {
        auto it = std::find(header.begin(), header.end(), *name);
        if (it == header.end()) { throw DataError(fmt::format("'{}' has no column named '{}'", path, *name)); }
        labelIdx = static_cast<std::size_t>(it - header.begin());
    } else {
        labelIdx = std::get<std::size_t>(label);
        if (labelIdx >= header.size()) { throw DataError(fmt::format("label column {} out of range", labelIdx)); }
    }

    std::size_t const cols = header.size();
    std::vector<std::vector<std::string>> rows;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (detail::Trim(line).empty()) { continue; }
        auto cells = detail::SplitCsvLine(line);
        if (cells.size() != cols) {
            throw DataError(fmt::format("'{}' line {}: expected {} cells, found {}", path, lineNo, cols, cells.size()));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            cells[c] = detail::Trim(cells[c]);
            if (cells[c].empty()) {
                throw DataError(fmt::format("'{}' line {} (row {}), column '{}': missing value", path, lineNo, rows.size() + 1, header[c]));
            }
        }
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) { throw DataError(fmt::format("'{}' has no data rows", path)); }

    std::vector<std::size_t> featureCols;
    for (std::size_t c = 0; c < cols; ++c) {
        if (c != labelIdx) { featureCols.push_back(c); }
    }
    Matrix x(rows.size(), featureCols.size());
    std::vector<std::string> featureNames;
    for (std::size_t j = 0; j < featureCols.size(); ++j) {
        std::size_t const c = featureCols[j];
        featureNames.push_back(header[c]);
        bool const numeric = detail::ParseNumber(rows.front()[c]).has_value();
        std::unordered_map<std::string, double> codes;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto const& cell = rows[r][c];
            if (numeric) {
                auto v = detail::ParseNumber(cell);
                if (!v) {
                    throw DataError(fmt::format("'{}' row {}, column '{}': cannot parse '{}' as a number", path, r + 1, header[c], cell));
                }
                x(r, j) = *v;
            } else {
                auto [it, _] = codes.emplace(cell, static_cast<double>(codes.size()));
                x(r, j) = it->second;
            }
        }
    }

    std::vector<int> y;
    std::vector<std::string> classNames;
    std::unordered_map<std::string, int> classCodes;
    for (auto const& row : rows) {
        auto [it, inserted] = classCodes.emplace(row[labelIdx], static_cast<int>(classCodes.size()));
        if (inserted) { classNames.push_back(row[labelIdx]); }
        y.push_back(it->second);
    }
    if (classNames.size() < 2) { throw DataError(fmt::format("'{}': label column has a single class", path)); }

    auto stem = path.substr(path.find_last_of('/') + 1);
    stem = stem.substr(0, stem.find_last_of('.'));
    return { stem, std::move(x), std::move(y), static_cast<int>(classNames.size()), std::move(featureNames), std::move(classNames), header[labelIdx] };
}

// Writes features with round-trip precision and the label column last.
inline void WriteCsv(Dataset const& data, std::string const& path)
{
    std::ofstream out(path);
    if (!out) { throw DataError(fmt::format("cannot write '{}'", path)); }
    for (auto const& name : data.FeatureNames()) { out << detail::QuoteCsv(name) << ','; }
    out << detail::QuoteCsv(data.LabelName()) << '\n';
    auto const& x = data.Features();
    for (std::size_t r = 0; r < x.Rows(); ++r) {
        for (double v : x.Row(r)) { out << fmt::format("{}", v) << ','; }
        out << detail::QuoteCsv(data.ClassNames()[static_cast<std::size_t>(data.Labels()[r])]) << '\n';
    }
}

// Sorted, unique row indices into a dataset. `id` identifies the draw for
// evaluation caching.
struct SubsetView {
    Dataset const* source { nullptr };
    std::vector<std::size_t> rows;
    std::uint64_t id { 0 };

    [[nodiscard]] std::size_t Size() const { return rows.size(); }
};

inline SubsetView FullView(Dataset const& data, std::uint64_t id = 0)
{
    SubsetView v { &data, std::vector<std::size_t>(data.Instances()), id };
    std::iota(v.rows.begin(), v.rows.end(), 0);
    return v;
}

// Largest-remainder proportional allocation of s draws over class counts.
// Each class gets at least min(minPerClass, count).
inline std::vector<std::size_t> AllocateStrata(std::vector<std::size_t> const& counts, std::size_t s, std::size_t minPerClass = 1)
{
    std::size_t const total = std::accumulate(counts.begin(), counts.end(), std::size_t { 0 });
    std::size_t const k = counts.size();
    std::vector<std::size_t> alloc(k);
    std::vector<double> quota(k);
    std::size_t used = 0;
    for (std::size_t c = 0; c < k; ++c) {
        quota[c] = static_cast<double>(s) * static_cast<double>(counts[c]) / static_cast<double>(total);
        alloc[c] = static_cast<std::size_t>(std::floor(quota[c]));
        used += alloc[c];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
    });
    for (std::size_t i = 0; used < s; i = (i + 1) % k) {
        if (alloc[order[i]] < counts[order[i]]) {
            ++alloc[order[i]];
            ++used;
        }
    }
    // Raise small strata to their floor, taking from the most over-quota ones.
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t const floorC = std::min(minPerClass, counts[c]);
        while (alloc[c] < floorC) {
            std::size_t donor = k;
            double surplus = -std::numeric_limits<double>::infinity();
            for (std::size_t d = 0; d < k; ++d) {
                if (alloc[d] > std::min(minPerClass, counts[d]) && static_cast<double>(alloc[d]) - quota[d] > surplus) {
                    surplus = static_cast<double>(alloc[d]) - quota[d];
                    donor = d;
                }
            }
            if (donor == k) { throw DataError("sample too small to cover every class"); }
            --alloc[donor];
            ++alloc[c];
        }
    }
    return alloc;
}

// Stratified uniform sampling without replacement. minPerClass raises the
// per-class floor above 1 (e.g. to the fold count) where the class allows.
inline SubsetView StratifiedSample(Dataset const& data, std::size_t s, RngStream& rng, std::size_t minPerClass = 1)
{
    auto const classes = static_cast<std::size_t>(data.Classes());
    if (s < classes * std::max<std::size_t>(1, minPerClass) || s > data.Instances()) {
        throw DataError(fmt::format("{}: sample size {} outside [{}, {}]", data.Name(), s, classes * std::max<std::size_t>(1, minPerClass), data.Instances()));
    }
    auto const alloc = AllocateStrata(data.ClassCounts(), s, minPerClass);
    std::vector<std::vector<std::size_t>> byClass(classes);
    for (std::size_t r = 0; r < data.Instances(); ++r) { byClass[static_cast<std::size_t>(data.Labels()[r])].push_back(r); }
    SubsetView view { &data, {}, 0 };
    view.rows.reserve(s);
    for (std::size_t c = 0; c < classes; ++c) {
        auto& members = byClass[c];
        for (std::size_t i = 0; i < alloc[c]; ++i) {
            std::size_t const j = i + rng.Index(members.size() - i);
            std::swap(members[i], members[j]);
            view.rows.push_back(members[i]);
        }
    }
    std::sort(view.rows.begin(), view.rows.end());
    return view;
}

struct Fold {
    std::vector<std::size_t> train; // dataset row indices, sorted
    std::vector<std::size_t> test;
};

// Stratified k-fold split. Each class is shuffled and dealt round-robin,
// continuing from the fold where the previous class stopped, so fold sizes
// differ by at most one overall and per class.
inline std::vector<Fold> KFoldPlan(SubsetView const& subset, std::size_t folds, RngStream& rng)
{
    if (folds < 2) { throw DataError("fold count must be at least 2"); }
    auto const& data = *subset.source;
    auto const classes = static_cast<std::size_t>(data.Classes());
    std::vector<std::vector<std::size_t>> byClass(classes);
    for (auto r : subset.rows) { byClass[static_cast<std::size_t>(data.Labels()[r])].push_back(r); }
    for (std::size_t c = 0; c < classes; ++c) {
        if (!byClass[c].empty() && byClass[c].size() < folds) {
            throw DataError(fmt::format("class '{}' has {} instances in the subset, fewer than {} folds", data.ClassNames()[c], byClass[c].size(), folds));
        }
    }
    std::vector<std::vector<std::size_t>> testSets(folds);
    std::size_t next = 0;
    for (auto& members : byClass) {
        rng.Shuffle(std::span(members));
        for (auto r : members) {
            testSets[next].push_back(r);
            next = (next + 1) % folds;
        }
    }
    std::vector<Fold> plan(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        std::sort(testSets[f].begin(), testSets[f].end());
        plan[f].test = testSets[f];
        for (std::size_t g = 0; g < folds; ++g) {
            if (g != f) { plan[f].train.insert(plan[f].train.end(), testSets[g].begin(), testSets[g].end()); }
        }
        std::sort(plan[f].train.begin(), plan[f].train.end());
    }
    return plan;
}

} // namespace ltpot
