#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "matcher/tensor.hpp"

namespace matcher {

/// Non-owning view of `rows` feature vectors of `channels` floats each.
struct FeatureRows {
  std::span<const float> values;
  int rows = 0;
  int channels = 0;

  static FeatureRows of(const FeatureMap& map) {
    return {map.data(), map.num_patches(), map.channels()};
  }
  static FeatureRows of(std::span<const float> values, int channels) {
    return {values, channels > 0 ? static_cast<int>(values.size()) / channels : 0, channels};
  }
  std::span<const float> row(int i) const {
    return values.subspan(static_cast<std::size_t>(i) * channels, static_cast<std::size_t>(channels));
  }
};

/// L x M cosine similarities, row-major, clamped to [-1, 1].
class CorrespondenceMatrix {
 public:
  CorrespondenceMatrix() = default;
  CorrespondenceMatrix(int rows, int cols, std::vector<float> values);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  float operator()(int i, int j) const { return values_[static_cast<std::size_t>(i) * cols_ + j]; }
  std::span<const float> row(int i) const {
    return {values_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const float> values() const noexcept { return values_; }

  CorrespondenceMatrix transposed() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> values_;
};

/// Zero-norm vectors have similarity 0 with everything.
CorrespondenceMatrix cosine_sim_matrix(const FeatureRows& src, const FeatureRows& dst);

CorrespondenceMatrix submatrix_rows(const CorrespondenceMatrix& s, std::span<const int> idx);

}  // namespace matcher
