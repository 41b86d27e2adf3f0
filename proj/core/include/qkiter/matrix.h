#ifndef QKITER_MATRIX_H_
#define QKITER_MATRIX_H_

#include <cstddef>
#include <span>
#include <vector>

namespace qkiter {

using Vector = std::vector<double>;

// Non-owning, read-only view of a row-major block of doubles.
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(const double* data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const double* data() const { return data_; }

  std::span<const double> row(std::size_t r) const {
    return {data_ + r * cols_, cols_};
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  // Rows [begin, begin + count).
  MatrixView slice_rows(std::size_t begin, std::size_t count) const {
    return {data_ + begin * cols_, count, cols_};
  }

 private:
  const double* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  MatrixView view() const { return {data_.data(), rows_, cols_}; }
  operator MatrixView() const { return view(); }  // NOLINT(google-explicit-constructor)

  void set_row(std::size_t r, std::span<const double> values);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Copies the selected rows of `source`, in the given order.
Matrix gather_rows(MatrixView source, std::span<const std::size_t> rows);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace qkiter

#endif  // QKITER_MATRIX_H_
