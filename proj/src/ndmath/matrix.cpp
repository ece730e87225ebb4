#include "revfraud/ndmath/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "revfraud/errors.hpp"

namespace revfraud::ndmath {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows) + " x " + std::to_string(cols));
  }
}

DenseMatrix DenseMatrix::row_vector(std::span<const double> values) {
  return DenseMatrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void DenseMatrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void affine_forward(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& bias, DenseMatrix& out) {
  if (x.cols() != w.cols() || bias.cols() != w.rows()) {
    throw ShapeError("affine: input width " + std::to_string(x.cols()) + " does not match weight " +
                     std::to_string(w.rows()) + " x " + std::to_string(w.cols()));
  }
  out = DenseMatrix(x.rows(), w.rows());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const auto xr = x.row(n);
    auto yr = out.row(n);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const auto wr = w.row(o);
      double acc = bias(0, o);
      for (std::size_t i = 0; i < wr.size(); ++i) acc += xr[i] * wr[i];
      yr[o] = acc;
    }
  }
}

}  // namespace revfraud::ndmath
