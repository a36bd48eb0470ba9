#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mrf/errors.hpp"

namespace mrf {

/// Dense row-major array with a dynamic shape. Immutable use after fill is the
/// expected pattern; containers persist these bit-exactly.
template <typename T>
class NDArray {
 public:
  NDArray() = default;

  explicit NDArray(std::vector<std::int64_t> shape)
      : shape_(std::move(shape)), data_(checked_size(shape_)) {}

  NDArray(std::vector<std::int64_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_size(shape_))
      throw DimensionError("nd_array: data length does not match shape");
  }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  const T* data() const { return data_.data(); }
  T* data() { return data_.data(); }
  const std::vector<T>& values() const { return data_; }
  std::vector<T>& values() { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }

  // Row-major linear index for up to three axes.
  std::size_t index(std::int64_t i, std::int64_t j) const {
    return static_cast<std::size_t>(i * shape_[1] + j);
  }
  std::size_t index(std::int64_t i, std::int64_t j, std::int64_t l) const {
    return static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + l);
  }

  T& at(std::int64_t i, std::int64_t j) { return data_[index(i, j)]; }
  const T& at(std::int64_t i, std::int64_t j) const { return data_[index(i, j)]; }
  T& at(std::int64_t i, std::int64_t j, std::int64_t l) { return data_[index(i, j, l)]; }
  const T& at(std::int64_t i, std::int64_t j, std::int64_t l) const {
    return data_[index(i, j, l)];
  }

  static std::size_t checked_size(const std::vector<std::int64_t>& shape) {
    if (shape.empty()) throw DimensionError("nd_array: empty shape");
    std::size_t n = 1;
    for (auto d : shape) {
      if (d <= 0) throw DimensionError("nd_array: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

 private:
  std::vector<std::int64_t> shape_;
  std::vector<T> data_;
};

using ComplexArray = NDArray<std::complex<double>>;
using RealArray = NDArray<double>;
using IntArray = NDArray<std::int64_t>;

inline bool all_finite(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

inline bool all_finite(const std::complex<double>* p, std::size_t n) {
  return all_finite(reinterpret_cast<const double*>(p), 2 * n);
}

}  // namespace mrf
