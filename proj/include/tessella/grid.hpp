#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "tessella/errors.hpp"

namespace tess {

// Dense row-major 2-D array. Used both for image planes and for generic
// numeric matrices (rows = samples, cols = dimensions).
template <typename T>
class BasicGrid {
  public:
    BasicGrid() = default;
    BasicGrid(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0) throw ShapeError("grid dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const T* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    bool same_shape(const BasicGrid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Grid = BasicGrid<double>;
using CGrid = BasicGrid<std::complex<double>>;
using Matrix = Grid;

inline void require_shape(const Grid& g, int rows, int cols, const char* what) {
    if (g.rows() != rows || g.cols() != cols)
        throw ShapeError(std::string(what) + ": unexpected grid shape");
}

}  // namespace tess
