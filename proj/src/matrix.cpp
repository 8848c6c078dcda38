#include "token_painter/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "token_painter/errors.hpp"

namespace tp {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto o = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = a(i, k);
      if (s == 0.0) continue;
      const auto br = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) o[j] += s * br[j];
    }
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const int> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<std::size_t>(rows[i]);
    if (r >= m.rows()) throw DimensionError("gather_rows: index out of range");
    std::ranges::copy(m.row(r), out.row(i).begin());
  }
  return out;
}

Matrix vstack(std::span<const Matrix* const> parts) {
  std::size_t rows = 0;
  std::size_t cols = parts.empty() ? 0 : parts.front()->cols();
  for (const auto* p : parts) {
    if (p->rows() > 0 && p->cols() != cols) throw DimensionError("vstack: column mismatch");
    rows += p->rows();
  }
  Matrix out(rows, cols);
  std::size_t r = 0;
  for (const auto* p : parts) {
    for (std::size_t i = 0; i < p->rows(); ++i) std::ranges::copy(p->row(i), out.row(r++).begin());
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_diff: shape");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace tp
