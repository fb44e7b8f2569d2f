#include "matcher/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "matcher/error.hpp"

namespace matcher {

namespace {

constexpr double kSimilaritySlack = 1e-5;

std::vector<double> row_norms(const FeatureRows& rows) {
  std::vector<double> norms(static_cast<std::size_t>(rows.rows));
  for (int i = 0; i < rows.rows; ++i) {
    double sq = 0.0;
    for (float v : rows.row(i)) sq += static_cast<double>(v) * v;
    norms[static_cast<std::size_t>(i)] = std::sqrt(sq);
  }
  return norms;
}

}  // namespace

CorrespondenceMatrix::CorrespondenceMatrix(int rows, int cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 0 || cols < 0 ||
      values_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    fail(ErrorCode::kDimMismatch, "correspondence values do not match " + std::to_string(rows) +
                                      "x" + std::to_string(cols));
  }
  for (auto& v : values_) {
    if (!(v >= -1.0 - kSimilaritySlack && v <= 1.0 + kSimilaritySlack)) {
      fail(ErrorCode::kInvalidArgument, "similarity outside [-1, 1]");
    }
    v = std::clamp(v, -1.0f, 1.0f);
  }
}

CorrespondenceMatrix CorrespondenceMatrix::transposed() const {
  std::vector<float> t(values_.size());
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) {
      t[static_cast<std::size_t>(j) * rows_ + i] = (*this)(i, j);
    }
  }
  return {cols_, rows_, std::move(t)};
}

CorrespondenceMatrix cosine_sim_matrix(const FeatureRows& src, const FeatureRows& dst) {
  if (src.channels != dst.channels) {
    fail(ErrorCode::kDimMismatch, "channel count " + std::to_string(src.channels) + " vs " +
                                      std::to_string(dst.channels));
  }
  if (src.rows < 1 || dst.rows < 1) {
    fail(ErrorCode::kInvalidArgument, "similarity needs at least one row on each side");
  }
  const auto src_norm = row_norms(src);
  const auto dst_norm = row_norms(dst);
  std::vector<float> values(static_cast<std::size_t>(src.rows) * dst.rows);
  for (int i = 0; i < src.rows; ++i) {
    const auto a = src.row(i);
    const double na = src_norm[static_cast<std::size_t>(i)];
    for (int j = 0; j < dst.rows; ++j) {
      const double nb = dst_norm[static_cast<std::size_t>(j)];
      double sim = 0.0;
      if (na > 0.0 && nb > 0.0) {
        const auto b = dst.row(j);
        double dot = 0.0;
        for (int c = 0; c < src.channels; ++c) dot += static_cast<double>(a[c]) * b[c];
        sim = std::clamp(dot / (na * nb), -1.0, 1.0);
      }
      values[static_cast<std::size_t>(i) * dst.rows + j] = static_cast<float>(sim);
    }
  }
  return {src.rows, dst.rows, std::move(values)};
}

CorrespondenceMatrix submatrix_rows(const CorrespondenceMatrix& s, std::span<const int> idx) {
  std::vector<float> out;
  out.reserve(idx.size() * static_cast<std::size_t>(s.cols()));
  for (int i : idx) {
    if (i < 0 || i >= s.rows()) {
      fail(ErrorCode::kIndexOutOfRange,
           "row " + std::to_string(i) + " of " + std::to_string(s.rows()));
    }
    const auto r = s.row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return {static_cast<int>(idx.size()), s.cols(), std::move(out)};
}

}  // namespace matcher
