#pragma once

#include <torch/torch.h>

#include <stdexcept>
#include <string>

namespace tempcycle {

enum class Domain { X, Y };

inline const char* domain_name(Domain d) { return d == Domain::X ? "X" : "Y"; }

/// One normalized RGB image, shape (3, H, W), values nominally in [-1, 1].
///
/// The tensor may carry autograd history; copying a Frame shares storage.
class Frame {
 public:
  Frame() = default;
  explicit Frame(torch::Tensor data) : data_(std::move(data)) {
    if (data_.dim() != 3 || data_.size(0) != 3) {
      throw std::invalid_argument("Frame: expected shape (3, H, W), got " +
                                  shape_string(data_));
    }
  }

  const torch::Tensor& tensor() const { return data_; }
  int64_t height() const { return data_.size(1); }
  int64_t width() const { return data_.size(2); }
  bool empty() const { return !data_.defined(); }

  /// Adds the batch dimension: (1, 3, H, W).
  torch::Tensor batched() const { return data_.unsqueeze(0); }
  Frame detached() const { return Frame(data_.detach()); }

  bool same_shape(const Frame& other) const {
    return data_.sizes() == other.data_.sizes();
  }

  static std::string shape_string(const torch::Tensor& t) {
    std::string s = "(";
    for (int64_t i = 0; i < t.dim(); ++i) {
      if (i) s += ", ";
      s += std::to_string(t.size(i));
    }
    return s + ")";
  }

 private:
  torch::Tensor data_;
};

/// Two frames of one sequence, `earlier` preceding `later` in time.
struct FramePair {
  Frame earlier;
  Frame later;

  FramePair() = default;
  FramePair(Frame e, Frame l) : earlier(std::move(e)), later(std::move(l)) {
    if (!earlier.same_shape(later)) {
      throw std::invalid_argument("FramePair: frame shapes differ");
    }
  }

  /// Channel-wise concatenation with a batch dimension: (1, 6, H, W).
  torch::Tensor stacked() const {
    return torch::cat({earlier.tensor(), later.tensor()}, 0).unsqueeze(0);
  }

  /// Inverse of stacked(); accepts (1, 6, H, W) or (6, H, W).
  static FramePair split(const torch::Tensor& t) {
    auto x = t.dim() == 4 ? t.squeeze(0) : t;
    if (x.dim() != 3 || x.size(0) != 6) {
      throw std::invalid_argument("FramePair::split: expected 6 channels, got " +
                                  Frame::shape_string(t));
    }
    return {Frame(x.slice(0, 0, 3)), Frame(x.slice(0, 3, 6))};
  }

  FramePair detached() const { return {earlier.detached(), later.detached()}; }
};

}  // namespace tempcycle
