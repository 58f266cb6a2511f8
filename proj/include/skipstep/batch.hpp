#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace skipstep {

/// Row-major (rows x cols) block of doubles: one sample per row.
class Batch {
public:
    Batch() = default;
    Batch(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Batch(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        assert(data_.size() == rows_ * cols_);
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    // Copy of rows [first, first + count).
    Batch slice(std::size_t first, std::size_t count) const {
        assert(first + count <= rows_);
        return Batch(count, cols_,
                     std::vector<double>(data_.begin() + first * cols_,
                                         data_.begin() + (first + count) * cols_));
    }

    friend bool operator==(const Batch&, const Batch&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace skipstep
