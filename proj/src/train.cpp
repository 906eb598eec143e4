#include "sain/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "sain/dataset.hpp"
#include "sain/ops.hpp"
#include "sain/resize.hpp"

namespace sain {

Tensor real_codec_01(const RealCodec& codec, const Tensor& x, int qf) {
  const Tensor out = codec(scale(x.detach(), 255.0), qf);
  return scale(out, 1.0 / 255.0).to(x.dtype());
}

GuidanceTargets make_guidance(const Tensor& x, const Tensor& y, int scale_factor, const RealCodec& codec,
                              int qf) {
  GuidanceTargets t;
  t.bicubic_lr = bicubic_resize(x.detach(), 1.0 / scale_factor, true);
  t.real_bicubic_lr = real_codec_01(codec, t.bicubic_lr, qf);
  t.real_y = real_codec_01(codec, y, qf);
  return t;
}

LossEvaluation evaluate_loss(const SainModel& model, const GmmParams& gmm, const Tensor& x,
                             const RealCodec& codec, int real_qf, const LossSettings& settings,
                             Rng& latent_rng, const GuidanceTargets* frozen) {
  LossEvaluation ev;
  ev.forward = model.forward(x, settings.quantize);
  if (frozen) {
    ev.targets = *frozen;
  } else {
    NoGradGuard no_grad;
    ev.targets = make_guidance(x, ev.forward.y, model.config().scale, codec, real_qf);
  }
  Tensor y_in = ev.forward.y;
  if (!settings.rec_from_raw_y) {
    y_in = scale(simulate_jpeg(scale(ev.forward.y, 255.0), settings.virtual_codec), 1.0 / 255.0);
  }
  ev.z = gmm_sample(gmm, model.latent_shape(x.shape()), settings.tau, latent_rng);
  ev.inverse = model.inverse(y_in, ev.z);
  LossInputs in{x, ev.inverse.x, ev.forward.y, ev.forward.y_hat, ev.inverse.y_r};
  ev.report = total_loss(in, ev.targets, settings.weights);
  return ev;
}

NamedParameters all_parameters(const SainModel& model, const GmmParams& gmm) {
  NamedParameters params = model.parameters();
  gmm.collect_parameters("gmm", params);
  return params;
}

TrainingState::TrainingState(const TrainConfig& cfg)
    : config(cfg),
      model(cfg.model_config(), cfg.seed),
      gmm(GmmParams::initial(cfg.gmm_k, cfg.precision, cfg.gmm_init_sigma, cfg.gmm_init_spread)),
      adam(all_parameters(model, gmm)) {}

// ---------------------------------------------------------------------------
// Checkpoint container

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void str64(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw CheckpointError("checkpoint is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str32() { return take(u32()); }
  std::string str64() { return take(u64()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

struct Record {
  DType dtype;
  Shape shape;
  std::vector<double> values;
};

void write_record(Writer& w, const std::string& name, DType dtype, const Shape& s,
                  const std::vector<double>& values) {
  w.str32(name);
  w.u8(dtype == DType::f64 ? 0 : 1);
  for (std::size_t d : {s.n, s.c, s.h, s.w}) w.u64(d);
  for (double v : values) {
    if (dtype == DType::f64) w.f64(v);
    else w.f32(static_cast<float>(v));
  }
}

void assign(Tensor& dst, const Record& rec, const std::string& name) {
  if (rec.shape != dst.shape() || rec.dtype != dst.dtype()) {
    throw CheckpointError("checkpoint record " + name + " has shape " + rec.shape.str() + "/" +
                          std::string(to_string(rec.dtype)) + ", model expects " + dst.shape().str() +
                          "/" + std::string(to_string(dst.dtype())));
  }
  dispatch(dst.dtype(), [&]<class T>() {
    auto data = dst.mutable_data<T>();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<T>(rec.values[i]);
  });
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainingState& state) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str64(state.config.serialize());
  w.u64(state.config.seed);
  w.u64(state.iteration);
  w.u64(state.adam.steps());
  const auto& params = state.adam.parameters();
  w.u64(params.size() * 3);
  for (const auto& [name, p] : params) write_record(w, name, p.dtype(), p.shape(), p.to_vector());
  for (std::size_t i = 0; i < params.size(); ++i) {
    write_record(w, "adam.m." + params[i].first, DType::f64, params[i].second.shape(),
                 state.adam.first_moments()[i]);
    write_record(w, "adam.v." + params[i].first, DType::f64, params[i].second.shape(),
                 state.adam.second_moments()[i]);
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw CheckpointError("failed to write checkpoint " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str());

  if (r.take(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  TrainConfig cfg;
  try {
    cfg = TrainConfig::parse(r.str64());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config is invalid: ") + e.what());
  }
  const std::uint64_t seed = r.u64();
  if (seed != cfg.seed) throw CheckpointError("checkpoint seed does not match its config");
  TrainingState state(cfg);
  state.iteration = r.u64();
  state.adam.set_steps(r.u64());

  std::map<std::string, Record> records;
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.str32();
    Record rec;
    const std::uint8_t code = r.u8();
    if (code > 1) throw CheckpointError("checkpoint record " + name + " has unknown dtype");
    rec.dtype = code == 0 ? DType::f64 : DType::f32;
    rec.shape = {r.u64(), r.u64(), r.u64(), r.u64()};
    rec.values.resize(rec.shape.numel());
    for (double& v : rec.values) v = rec.dtype == DType::f64 ? r.f64() : r.f32();
    if (!records.emplace(name, std::move(rec)).second) {
      throw CheckpointError("checkpoint has duplicate record " + name);
    }
  }
  if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");

  auto take = [&](const std::string& name) -> Record {
    auto it = records.find(name);
    if (it == records.end()) throw CheckpointError("checkpoint is missing record " + name);
    Record rec = std::move(it->second);
    records.erase(it);
    return rec;
  };
  NamedParameters params = state.adam.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params[i].first;
    assign(params[i].second, take(name), name);
    for (auto* moments : {&state.adam.first_moments(), &state.adam.second_moments()}) {
      const std::string key = (moments == &state.adam.first_moments() ? "adam.m." : "adam.v.") + name;
      Record rec = take(key);
      if (rec.shape != params[i].second.shape() || rec.dtype != DType::f64) {
        throw CheckpointError("checkpoint record " + key + " has the wrong layout");
      }
      (*moments)[i] = std::move(rec.values);
    }
  }
  if (!records.empty()) throw CheckpointError("checkpoint has unexpected record " + records.begin()->first);
  return state;
}

// ---------------------------------------------------------------------------
// Metrics log

std::string format_metrics_row(const MetricsRow& row) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<unsigned long long>(row.iter), row.rec, row.fit, row.fit_prime, row.reg,
                row.rel, row.total, row.lr);
  return buf;
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics log " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kMetricsHeader) throw std::runtime_error("unexpected metrics header in " + path.string());
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MetricsRow m;
    unsigned long long it = 0;
    if (std::sscanf(line.c_str(), "%llu,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &it, &m.rec, &m.fit, &m.fit_prime,
                    &m.reg, &m.rel, &m.total, &m.lr) != 8) {
      throw std::runtime_error("malformed metrics row: " + line);
    }
    m.iter = it;
    rows.push_back(m);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

enum Stream : std::uint64_t { kData = 1, kLatent = 2, kQuality = 3 };

void check_resume_compatible(const TrainConfig& saved, const TrainConfig& now) {
  auto fail = [](const std::string& key) {
    throw ConfigError("cannot resume: '" + key + "' differs from the checkpoint");
  };
  if (saved.scale != now.scale) fail("scale");
  if (saved.total_blocks != now.total_blocks) fail("total_blocks");
  if (saved.enhanced_blocks != now.enhanced_blocks) fail("enhanced_blocks");
  if (saved.growth != now.growth) fail("growth");
  if (saved.clamp_alpha != now.clamp_alpha) fail("clamp_alpha");
  if (saved.gmm_k != now.gmm_k) fail("gmm_k");
  if (saved.precision != now.precision) fail("precision");
  if (saved.seed != now.seed) fail("seed");
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  std::optional<TrainingState> loaded;
  if (options.resume) {
    loaded.emplace(load_checkpoint(*options.resume));
    check_resume_compatible(loaded->config, cfg);
    loaded->config = cfg;
  } else {
    loaded.emplace(cfg);
  }
  TrainResult result{std::move(*loaded), {}, {}};
  TrainingState& state = result.state;

  const Dataset data = Dataset::scan(cfg.dataset_dir, cfg.crop_size, options.log);
  const std::filesystem::path dir = cfg.checkpoint_dir;
  std::filesystem::create_directories(dir);
  result.checkpoint = dir / kCheckpointFile;
  const std::filesystem::path metrics_path = dir / kMetricsFile;

  // Keep only rows before the resume point so the log stays one trajectory.
  {
    std::vector<MetricsRow> kept;
    if (options.resume && std::filesystem::exists(metrics_path)) {
      for (const auto& row : read_metrics(metrics_path)) {
        if (row.iter < state.iteration) kept.push_back(row);
      }
    }
    std::ofstream out(metrics_path, std::ios::trunc);
    out << kMetricsHeader << "\n";
    for (const auto& row : kept) out << format_metrics_row(row) << "\n";
    if (!out) throw TrainingAborted("cannot write metrics log " + metrics_path.string());
  }
  std::ofstream metrics(metrics_path, std::ios::app);

  const RealCodec codec = make_real_codec(cfg);
  LossSettings settings;
  settings.virtual_codec = cfg.codec_config();
  settings.tau = cfg.gumbel_tau;
  settings.rec_from_raw_y = cfg.rec_from_raw_y;
  settings.weights = cfg.weights;

  for (std::uint64_t it = state.iteration; it < cfg.iterations; ++it) {
    Rng data_rng = Rng::derive(cfg.seed, {it, kData});
    Rng latent_rng = Rng::derive(cfg.seed, {it, kLatent});
    int qf = cfg.train_qf;
    if (!cfg.mixed_qf.empty()) {
      Rng qf_rng = Rng::derive(cfg.seed, {it, kQuality});
      qf = cfg.mixed_qf[qf_rng.below(cfg.mixed_qf.size())];
    }
    settings.virtual_codec.qf = qf;

    const Tensor x = load_batch(data, cfg.crop_size, cfg.batch_size, data_rng, cfg.precision);
    state.adam.zero_grad();
    LossEvaluation ev = evaluate_loss(state.model, state.gmm, x, codec, qf, settings, latent_rng);
    if (!std::isfinite(ev.report.total_value)) {
      throw TrainingAborted("non-finite loss at iteration " + std::to_string(it) +
                            "; last good checkpoint kept at " + result.checkpoint.string());
    }
    ev.report.total.backward();
    const double lr = scheduled_lr(cfg.lr, cfg.lr_half_life, it);
    try {
      state.adam.step(lr);
    } catch (const NonFiniteGradient& e) {
      throw TrainingAborted(std::string(e.what()) + " at iteration " + std::to_string(it) +
                            "; last good checkpoint kept at " + result.checkpoint.string());
    }
    state.iteration = it + 1;

    const MetricsRow row{it,
                         ev.report.rec,
                         ev.report.fit,
                         ev.report.fit_prime,
                         ev.report.reg,
                         ev.report.rel,
                         ev.report.total_value,
                         lr};
    result.rows.push_back(row);
    metrics << format_metrics_row(row) << "\n";
    metrics.flush();
    if (options.log && options.log_every && (it % options.log_every == 0 || it + 1 == cfg.iterations)) {
      *options.log << "iter " << it << " total " << row.total << " rec " << row.rec << " lr " << lr << "\n";
    }
    if ((cfg.checkpoint_every && state.iteration % cfg.checkpoint_every == 0) ||
        state.iteration == cfg.iterations) {
      save_checkpoint(result.checkpoint, state);
    }
  }
  if (state.iteration >= cfg.iterations && !std::filesystem::exists(result.checkpoint)) {
    save_checkpoint(result.checkpoint, state);
  }
  return result;
}

}  // namespace sain
