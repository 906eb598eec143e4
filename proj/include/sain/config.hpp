#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sain/codec.hpp"
#include "sain/invnet.hpp"
#include "sain/losses.hpp"

namespace sain {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key=value training description. '#' starts a comment; unknown or
/// repeated keys are errors.
struct TrainConfig {
  int scale = 2;
  std::size_t crop_size = 64;
  std::size_t batch_size = 4;
  std::uint64_t iterations = 2000;
  double lr = 2e-4;
  std::uint64_t lr_half_life = 2000;  // 0 disables decay
  LossWeights weights;
  int train_qf = 75;
  std::vector<int> mixed_qf;  // experiment: draw the training QF per iteration from this list
  std::string codec = "internal-jpeg";  // or external:<command template>
  std::size_t gmm_k = 5;
  double gmm_init_sigma = 1.0;
  double gmm_init_spread = 1.0;
  double gumbel_tau = 1.0;
  int fourier_terms = 10;
  std::uint64_t seed = 0;
  std::string dataset_dir;
  std::string checkpoint_dir = "checkpoints";
  DType precision = DType::f64;
  std::size_t total_blocks = 8;
  std::size_t enhanced_blocks = 5;
  std::size_t growth = 16;
  double clamp_alpha = 1.0;
  std::uint64_t checkpoint_every = 0;  // 0: only at the end
  bool rec_from_raw_y = false;

  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);
  /// Canonical text; parse(serialize()) reproduces every field.
  std::string serialize() const;
  void validate() const;

  ModelConfig model_config() const;
  CodecConfig codec_config() const;
};

/// Real codec selected by the `codec` key.
RealCodec make_real_codec(const TrainConfig& config);

}  // namespace sain
