#include "qkiter/matrix.h"

#include <algorithm>
#include <string>

#include "qkiter/error.h"

namespace qkiter {

void Matrix::set_row(std::size_t r, std::span<const double> values) {
  require(values.size() == cols_, ErrorKind::kInputShape,
          "row of length " + std::to_string(values.size()) + " into matrix with " +
              std::to_string(cols_) + " columns");
  std::copy(values.begin(), values.end(), row(r).begin());
}

Matrix gather_rows(MatrixView source, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < source.rows(), ErrorKind::kIndex,
            "row " + std::to_string(rows[i]) + " out of " + std::to_string(source.rows()));
    out.set_row(i, source.row(rows[i]));
  }
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace qkiter
