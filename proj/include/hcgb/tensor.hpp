#pragma once

// Small dense row-major tensor for the pointwise curvature data. Indices are
// 0-based; user-facing formats convert from 1-based.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "hcgb/errors.hpp"

namespace hcgb {

template <std::size_t Rank>
class Tensor {
 public:
  Tensor() { dims_.fill(0); }

  explicit Tensor(std::array<int, Rank> dims) : dims_(dims) {
    std::size_t total = 1;
    for (int d : dims_) {
      if (d < 0) throw ArgumentError("negative tensor extent");
      total *= static_cast<std::size_t>(d);
    }
    data_.assign(total, 0.0);
  }

  const std::array<int, Rank>& dims() const { return dims_; }
  int dim(std::size_t k) const { return dims_[k]; }
  std::size_t size() const { return data_.size(); }

  template <class... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[offset({static_cast<int>(idx)...})];
  }
  template <class... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[offset({static_cast<int>(idx)...})];
  }

  double& at(const std::array<int, Rank>& idx) {
    check(idx);
    return data_[offset(idx)];
  }
  double at(const std::array<int, Rank>& idx) const {
    check(idx);
    return data_[offset(idx)];
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return v == 0.0; });
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  Tensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.dims_ == b.dims_ && a.data_ == b.data_; }

 private:
  std::size_t offset(const std::array<int, Rank>& idx) const {
    std::size_t o = 0;
    for (std::size_t k = 0; k < Rank; ++k) o = o * static_cast<std::size_t>(dims_[k]) + static_cast<std::size_t>(idx[k]);
    return o;
  }
  void check(const std::array<int, Rank>& idx) const {
    for (std::size_t k = 0; k < Rank; ++k)
      if (idx[k] < 0 || idx[k] >= dims_[k]) throw ArgumentError("tensor index out of range");
  }

  std::array<int, Rank> dims_;
  std::vector<double> data_;
};

using Tensor3 = Tensor<3>;
using Tensor4 = Tensor<4>;

// max |a - b| over matching tensors.
template <std::size_t Rank>
double max_abs_diff(const Tensor<Rank>& a, const Tensor<Rank>& b) {
  if (a.dims() != b.dims()) throw ArgumentError("tensor shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
  return m;
}

}  // namespace hcgb
