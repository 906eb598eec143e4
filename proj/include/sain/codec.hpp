#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>

#include "sain/tensor.hpp"

namespace sain {

/// 8x8 quantization tables, row-major (index = row * 8 + col).
struct QuantTables {
  std::array<int, 64> luma{};
  std::array<int, 64> chroma{};

  friend bool operator==(const QuantTables&, const QuantTables&) = default;
};

/// The baseline (Annex K) luminance and chrominance tables.
const QuantTables& base_quant_tables();

/// Standard quality scaling: s = 5000/qf below 50, else 200 - 2*qf; each
/// entry is clamp(floor((base*s + 50) / 100), 1, 255).
QuantTables qf_to_tables(int qf);

enum class ChromaSubsampling { k444 };

struct CodecConfig {
  int qf = 75;
  int fourier_terms = 10;
  ChromaSubsampling subsampling = ChromaSubsampling::k444;

  void validate() const;
};

using Block8 = std::array<double, 64>;

/// Orthonormal 2-D DCT-II of a row-major 8x8 block, and its inverse.
Block8 dct8x8(const Block8& block);
Block8 idct8x8(const Block8& coefficients);

/// Differentiable rounding: x - sum_{k=1..terms} (-1)^{k+1} sin(2 pi k x) / (k pi).
Tensor fourier_round(const Tensor& x, int terms);

/// Differentiable JPEG surrogate on RGB values in [0, 255]: BT.601 YCbCr,
/// blockwise DCT, table division, fourier_round, dequantization, inverse DCT,
/// back to RGB and a smooth clamp to [0, 255]. h and w must be multiples of 8.
Tensor simulate_jpeg(const Tensor& img, const CodecConfig& config);

/// Reference pixel codec with the same pipeline, true rounding, hard clamping
/// and 8-bit output. Not differentiable; the result never requires grad.
Tensor real_jpeg(const Tensor& img, const CodecConfig& config);

/// round(255 * clamp(x, 0, 1)) / 255 forward; backward passes the gradient
/// unchanged on [0, 1] and blocks it outside.
Tensor ste_quantize_8bit(const Tensor& x);

/// A shell command that maps a lossless PNG at {IN} to a decoded PNG at {OUT}.
/// {Q} expands to the quality and {TMP} to a scratch path in the per-call
/// temporary directory.
struct ExternalCodecSpec {
  std::string command_template;
  std::filesystem::path working_directory;
};

class CodecError : public std::runtime_error {
 public:
  CodecError(const std::string& message, std::string output)
      : std::runtime_error(message), output_(std::move(output)) {}
  const std::string& output() const { return output_; }

 private:
  std::string output_;
};

/// Environment variable whose value is prepended to PATH for external commands.
inline constexpr const char* kCodecPathEnv = "SAIN_CODEC_PATH";

/// Round-trips each batch item of an RGB [0, 255] tensor through the external
/// command. Temporary files live in a unique directory removed on return.
Tensor external_codec_roundtrip(const Tensor& img, const ExternalCodecSpec& spec, int quality);

/// Non-differentiable real codec used for guidance targets and evaluation.
using RealCodec = std::function<Tensor(const Tensor& img, int qf)>;

RealCodec internal_jpeg_codec(int fourier_terms = 10);
RealCodec external_codec(ExternalCodecSpec spec);

}  // namespace sain
