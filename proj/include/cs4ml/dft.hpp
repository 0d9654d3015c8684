#pragma once

// Unitary d-dimensional DFT (F^* F = I) on lexicographically flattened
// n x ... x n arrays, via separable radix-2 FFTs.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "cs4ml/error.hpp"
#include "cs4ml/measure.hpp"

namespace cs4ml {

using Complex = std::complex<double>;

class UnitaryDft {
 public:
  UnitaryDft(Index side, int dim) : side_(side), dim_(dim) {
    detail::require(dim >= 1 && dim <= 3, "UnitaryDft: dimension must be 1, 2 or 3");
    detail::require(side >= 1 && (side & (side - 1)) == 0, "UnitaryDft: side length must be a power of two");
    length_ = 1;
    for (int k = 0; k < dim; ++k) length_ *= side;
    int bits = 0;
    while ((Index{1} << bits) < side) ++bits;
    bitrev_.resize(static_cast<std::size_t>(side));
    for (Index i = 0; i < side; ++i) {
      Index r = 0;
      for (int b = 0; b < bits; ++b)
        if (i & (Index{1} << b)) r |= Index{1} << (bits - 1 - b);
      bitrev_[static_cast<std::size_t>(i)] = r;
    }
  }

  [[nodiscard]] Index side() const { return side_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] Index length() const { return length_; }

  [[nodiscard]] Eigen::VectorXcd forward(const Eigen::VectorXcd& x) const { return transform(x, -1.0); }
  [[nodiscard]] Eigen::VectorXcd inverse(const Eigen::VectorXcd& y) const { return transform(y, +1.0); }

  /// Applies the transform to every column.
  [[nodiscard]] Eigen::MatrixXcd forward_columns(const Eigen::MatrixXcd& x) const {
    Eigen::MatrixXcd out(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) out.col(j) = forward(x.col(j));
    return out;
  }

 private:
  [[nodiscard]] Eigen::VectorXcd transform(const Eigen::VectorXcd& x, double sign) const {
    detail::require(x.size() == length_, "UnitaryDft: length mismatch");
    Eigen::VectorXcd y = x;
    std::vector<Complex> line(static_cast<std::size_t>(side_));
    // Axis a has stride side^(dim-1-a) in the lexicographic layout.
    Index stride = length_;
    for (int a = 0; a < dim_; ++a) {
      stride /= side_;
      const Index block = stride * side_;
      for (Index base = 0; base < length_; base += block) {
        for (Index off = 0; off < stride; ++off) {
          for (Index j = 0; j < side_; ++j) line[static_cast<std::size_t>(j)] = y(base + off + j * stride);
          fft_inplace(line, sign);
          for (Index j = 0; j < side_; ++j) y(base + off + j * stride) = line[static_cast<std::size_t>(j)];
        }
      }
    }
    y /= std::sqrt(static_cast<double>(length_));
    return y;
  }

  void fft_inplace(std::vector<Complex>& a, double sign) const {
    const auto n = static_cast<Index>(a.size());
    for (Index i = 0; i < n; ++i) {
      const Index r = bitrev_[static_cast<std::size_t>(i)];
      if (i < r) std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(r)]);
    }
    for (Index len = 2; len <= n; len <<= 1) {
      const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
      const Complex wl(std::cos(ang), std::sin(ang));
      for (Index i = 0; i < n; i += len) {
        Complex w(1.0, 0.0);
        for (Index j = 0; j < len / 2; ++j) {
          auto& lo = a[static_cast<std::size_t>(i + j)];
          auto& hi = a[static_cast<std::size_t>(i + j + len / 2)];
          const Complex u = lo;
          const Complex v = hi * w;
          lo = u + v;
          hi = u - v;
          w *= wl;
        }
      }
    }
  }

  Index side_;
  int dim_;
  Index length_ = 1;
  std::vector<Index> bitrev_;
};

}  // namespace cs4ml
