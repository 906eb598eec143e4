#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sain/codec.hpp"
#include "sain/config.hpp"
#include "sain/gmm.hpp"
#include "sain/invnet.hpp"
#include "sain/losses.hpp"
#include "sain/optim.hpp"
#include "sain/rng.hpp"

namespace sain {

/// Scales a [0, 1] tensor to [0, 255], runs the real codec and scales back.
/// The result is a constant.
Tensor real_codec_01(const RealCodec& codec, const Tensor& x, int qf);

/// Bicubic(x), real(Bicubic(x)) and real(y) for one batch.
GuidanceTargets make_guidance(const Tensor& x, const Tensor& y, int scale, const RealCodec& codec,
                              int qf);

struct LossSettings {
  CodecConfig virtual_codec;  // qf and series length of the simulator inside the graph
  double tau = 1.0;
  bool rec_from_raw_y = false;
  bool quantize = true;
  LossWeights weights;
};

struct LossEvaluation {
  LossReport report;
  ModelForward forward;
  ModelInverse inverse;
  GuidanceTargets targets;
  Tensor z;
};

/// Full objective for one HR batch in [0, 1]: forward pass, guidance targets,
/// virtual codec on y, latent sample, inverse pass and the weighted loss.
/// `frozen` replaces the freshly computed guidance targets when given.
LossEvaluation evaluate_loss(const SainModel& model, const GmmParams& gmm, const Tensor& x,
                             const RealCodec& codec, int real_qf, const LossSettings& settings,
                             Rng& latent_rng, const GuidanceTargets* frozen = nullptr);

/// Everything a checkpoint restores.
struct TrainingState {
  TrainConfig config;
  SainModel model;
  GmmParams gmm;
  Adam adam;
  std::uint64_t iteration = 0;

  explicit TrainingState(const TrainConfig& cfg);
};

/// Model parameters followed by gmm.logits, gmm.means, gmm.raw_scales.
NamedParameters all_parameters(const SainModel& model, const GmmParams& gmm);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'I', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const TrainingState& state);
TrainingState load_checkpoint(const std::filesystem::path& path);

struct MetricsRow {
  std::uint64_t iter = 0;
  double rec = 0, fit = 0, fit_prime = 0, reg = 0, rel = 0, total = 0, lr = 0;
};

inline constexpr const char* kMetricsHeader = "iter,l_rec,l_fit,l_fit_prime,l_reg,l_rel,total,lr";
std::string format_metrics_row(const MetricsRow& row);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume;
  std::ostream* log = nullptr;
  std::uint64_t log_every = 50;
};

struct TrainResult {
  TrainingState state;
  std::vector<MetricsRow> rows;  // rows produced by this call
  std::filesystem::path checkpoint;
};

inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kMetricsFile = "metrics.csv";

/// Runs cfg.iterations optimizer steps (continuing from a checkpoint when
/// resuming). Writes metrics.csv and checkpoint.bin into cfg.checkpoint_dir.
TrainResult train(const TrainConfig& cfg, const TrainOptions& options = {});

}  // namespace sain
