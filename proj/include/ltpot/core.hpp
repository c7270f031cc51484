#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ltpot {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed pipeline text.
class ParseError : public Error {
public:
    using Error::Error;
};

// Bad or unusable input data.
class DataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Raised from inside fitters when the cooperative deadline passes.
class TimeoutError : public Error {
public:
    using Error::Error;
};

class NoViablePipeline : public Error {
public:
    using Error::Error;
};

using Clock = std::chrono::steady_clock;

// A point in time after which cooperative work should stop. A default
// constructed deadline never expires.
class Deadline {
public:
    Deadline() = default;

    static Deadline At(Clock::time_point when) { return Deadline(when); }

    static Deadline After(double seconds)
    {
        auto const delta = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
        return Deadline(Clock::now() + delta);
    }

    [[nodiscard]] bool Unbounded() const { return !when_.has_value(); }
    [[nodiscard]] bool Expired() const { return when_ && Clock::now() >= *when_; }

    void Check() const
    {
        if (Expired()) {
            throw TimeoutError("evaluation time limit exceeded");
        }
    }

    [[nodiscard]] Deadline Earliest(Deadline const& other) const
    {
        if (!when_) { return other; }
        if (!other.when_) { return *this; }
        return Deadline(std::min(*when_, *other.when_));
    }

private:
    explicit Deadline(Clock::time_point when)
        : when_(when)
    {
    }

    std::optional<Clock::time_point> when_;
};

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows)
        , cols_(cols)
        , data_(rows * cols, fill)
    {
    }

    [[nodiscard]] std::size_t Rows() const { return rows_; }
    [[nodiscard]] std::size_t Cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> Row(std::size_t r) { return { data_.data() + r * cols_, cols_ }; }
    [[nodiscard]] std::span<double const> Row(std::size_t r) const { return { data_.data() + r * cols_, cols_ }; }

    [[nodiscard]] std::span<double const> Data() const { return data_; }
    std::span<double> Data() { return data_; }

    // Copy of the given rows, in order.
    [[nodiscard]] Matrix SelectRows(std::span<std::size_t const> rows) const
    {
        Matrix out(rows.size(), cols_);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[i] * cols_), cols_, out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
        }
        return out;
    }

    [[nodiscard]] Matrix SelectCols(std::span<std::size_t const> cols) const
    {
        Matrix out(rows_, cols.size());
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t j = 0; j < cols.size(); ++j) {
                out(r, j) = (*this)(r, cols[j]);
            }
        }
        return out;
    }

    friend bool operator==(Matrix const&, Matrix const&) = default;

private:
    std::size_t rows_ { 0 };
    std::size_t cols_ { 0 };
    std::vector<double> data_;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results land in
// index order, so the output does not depend on scheduling. fn must not throw.
template <typename Fn>
auto ParallelMap(std::size_t n, std::size_t threads, Fn&& fn) -> std::vector<decltype(fn(std::size_t {}))>
{
    using Result = decltype(fn(std::size_t {}));
    std::vector<std::optional<Result>> slots(n);
    std::size_t const workers = std::max<std::size_t>(1, std::min(threads, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) { slots[i].emplace(fn(i)); }
    } else {
        std::atomic<std::size_t> next { 0 };
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    slots[i].emplace(fn(i));
                }
            });
        }
    }
    std::vector<Result> out;
    out.reserve(n);
    for (auto& s : slots) { out.push_back(std::move(*s)); }
    return out;
}

inline std::size_t DefaultThreads()
{
    return std::max(1U, std::thread::hardware_concurrency());
}

} // namespace ltpot
