#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sain/tensor.hpp"

namespace sain {

enum class Subband { LL = 0, LH = 1, HL = 2, HH = 3 };

/// Orthonormal 2-D Haar analysis: (n,c,h,w) -> (n,4c,h/2,w/2). Output channel
/// 4*k + s holds subband s of input channel k. For the 2x2 block [a b; c d]:
/// LL=(a+b+c+d)/2, LH=(a-b+c-d)/2, HL=(a+b-c-d)/2, HH=(a-b-c+d)/2.
Tensor haar_forward(const Tensor& x);

/// Synthesis inverse of haar_forward. Since the transform is orthonormal this
/// is also its adjoint, which is what the backward pass of each uses.
Tensor haar_inverse(const Tensor& t);

/// Where an output channel of a HaarStack comes from.
struct ChannelOrigin {
  std::size_t level;           // 1-based level that produced this channel
  Subband subband;             // subband at that level
  std::size_t source_channel;  // channel index in the previous level's output
  bool low_frequency;          // LL at every level
};

/// `levels` successive Haar transforms, each applied to every channel of the
/// previous level. The LF group is the LL-of-LL path (one channel per input
/// channel); every other channel is HF.
class HaarStack {
 public:
  explicit HaarStack(std::size_t levels, std::size_t in_channels = 3);

  /// levels = log2(scale); scale must be 2 or 4.
  static HaarStack for_scale(int scale, std::size_t in_channels = 3);

  std::size_t levels() const { return levels_; }
  std::size_t in_channels() const { return in_channels_; }
  std::size_t out_channels() const { return layout_.size(); }
  std::size_t factor() const { return std::size_t{1} << levels_; }
  const std::vector<ChannelOrigin>& layout() const { return layout_; }
  const std::vector<std::size_t>& lf_channels() const { return lf_; }
  const std::vector<std::size_t>& hf_channels() const { return hf_; }

  Tensor forward(const Tensor& x) const;
  Tensor inverse(const Tensor& t) const;

  std::pair<Tensor, Tensor> split(const Tensor& t) const;
  Tensor merge(const Tensor& lf, const Tensor& hf) const;

 private:
  std::size_t levels_;
  std::size_t in_channels_;
  std::vector<ChannelOrigin> layout_;
  std::vector<std::size_t> lf_;
  std::vector<std::size_t> hf_;
  std::vector<std::size_t> merge_order_;
};

}  // namespace sain
