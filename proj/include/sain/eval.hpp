#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sain/codec.hpp"
#include "sain/gmm.hpp"
#include "sain/invnet.hpp"

namespace sain {

/// Top-left crop to the largest multiple of `multiple` in both dimensions.
Tensor crop_to_multiple(const Tensor& img, std::size_t multiple);

/// Rounds and clamps to 8-bit levels.
Tensor to_8bit(const Tensor& img255);

/// Model LR for an HR image in [0, 255]; result in [0, 255], 8-bit levels.
Tensor sain_downscale(const SainModel& model, const Tensor& hr255);
/// HR reconstruction from an LR image in [0, 255] with a latent drawn from
/// `gmm`; result rounded to 8-bit levels.
Tensor sain_upscale(const SainModel& model, const GmmParams& gmm, const Tensor& lr255, double tau,
                    Rng& rng);

/// downscale -> real codec -> upscale. qf <= 0 skips the codec.
Tensor sain_roundtrip(const SainModel& model, const GmmParams& gmm, const Tensor& hr255,
                      const RealCodec& codec, int qf, double tau, Rng& rng);
/// Bicubic down -> 8-bit -> real codec -> bicubic up -> 8-bit. qf <= 0 skips the codec.
Tensor bicubic_roundtrip(const Tensor& hr255, int scale, const RealCodec& codec, int qf);

struct EvalRow {
  std::string method;
  int qf = 0;
  double psnr = 0;
  double ssim = 0;
};

inline constexpr const char* kBicubicMethod = "Bicubic & Bicubic";
inline constexpr const char* kSainMethod = "SAIN";

struct EvalOptions {
  std::vector<int> qfs{30, 50, 70, 80, 90};
  std::uint64_t seed = 0;
  double tau = 1.0;
  std::size_t border = 0;  // 0: use the scale factor
};

/// Mean PSNR-Y / SSIM-Y per QF for the bicubic baseline and the model over
/// HR images in [0, 255] (cropped to multiples of scale * 8).
std::vector<EvalRow> evaluate(const SainModel& model, const GmmParams& gmm,
                              const std::vector<Tensor>& hr_images, const RealCodec& codec,
                              const EvalOptions& options);

std::string format_eval_markdown(const std::vector<EvalRow>& rows, const std::vector<int>& qfs);
std::string format_eval_csv(const std::vector<EvalRow>& rows);

}  // namespace sain
