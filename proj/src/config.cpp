#include "sain/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sain/gmm.hpp"

namespace sain {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value for " + key + ": '" + value + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<int>(key, item));
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scale", [](TrainConfig& c, auto& k, auto& v) { c.scale = parse_number<int>(k, v); }},
      {"crop_size", [](TrainConfig& c, auto& k, auto& v) { c.crop_size = parse_number<std::size_t>(k, v); }},
      {"batch_size", [](TrainConfig& c, auto& k, auto& v) { c.batch_size = parse_number<std::size_t>(k, v); }},
      {"iterations", [](TrainConfig& c, auto& k, auto& v) { c.iterations = parse_number<std::uint64_t>(k, v); }},
      {"lr", [](TrainConfig& c, auto& k, auto& v) { c.lr = parse_number<double>(k, v); }},
      {"lr_half_life", [](TrainConfig& c, auto& k, auto& v) { c.lr_half_life = parse_number<std::uint64_t>(k, v); }},
      {"lambda_rec", [](TrainConfig& c, auto& k, auto& v) { c.weights.rec = parse_number<double>(k, v); }},
      {"lambda_fit", [](TrainConfig& c, auto& k, auto& v) { c.weights.fit = parse_number<double>(k, v); }},
      {"lambda_fit_prime", [](TrainConfig& c, auto& k, auto& v) { c.weights.fit_prime = parse_number<double>(k, v); }},
      {"lambda_reg", [](TrainConfig& c, auto& k, auto& v) { c.weights.reg = parse_number<double>(k, v); }},
      {"lambda_rel", [](TrainConfig& c, auto& k, auto& v) { c.weights.rel = parse_number<double>(k, v); }},
      {"train_qf", [](TrainConfig& c, auto& k, auto& v) { c.train_qf = parse_number<int>(k, v); }},
      {"mixed_qf", [](TrainConfig& c, auto& k, auto& v) { c.mixed_qf = parse_int_list(k, v); }},
      {"codec", [](TrainConfig& c, auto&, auto& v) { c.codec = v; }},
      {"gmm_k", [](TrainConfig& c, auto& k, auto& v) { c.gmm_k = parse_number<std::size_t>(k, v); }},
      {"gmm_init_sigma", [](TrainConfig& c, auto& k, auto& v) { c.gmm_init_sigma = parse_number<double>(k, v); }},
      {"gmm_init_spread", [](TrainConfig& c, auto& k, auto& v) { c.gmm_init_spread = parse_number<double>(k, v); }},
      {"gumbel_tau", [](TrainConfig& c, auto& k, auto& v) { c.gumbel_tau = parse_number<double>(k, v); }},
      {"fourier_terms", [](TrainConfig& c, auto& k, auto& v) { c.fourier_terms = parse_number<int>(k, v); }},
      {"seed", [](TrainConfig& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"dataset_dir", [](TrainConfig& c, auto&, auto& v) { c.dataset_dir = v; }},
      {"checkpoint_dir", [](TrainConfig& c, auto&, auto& v) { c.checkpoint_dir = v; }},
      {"precision", [](TrainConfig& c, auto&, auto& v) {
         try {
           c.precision = parse_dtype(v);
         } catch (const std::exception&) {
           throw ConfigError("invalid precision '" + v + "' (expected f64 or f32)");
         }
       }},
      {"total_blocks", [](TrainConfig& c, auto& k, auto& v) { c.total_blocks = parse_number<std::size_t>(k, v); }},
      {"enhanced_blocks", [](TrainConfig& c, auto& k, auto& v) { c.enhanced_blocks = parse_number<std::size_t>(k, v); }},
      {"growth", [](TrainConfig& c, auto& k, auto& v) { c.growth = parse_number<std::size_t>(k, v); }},
      {"clamp_alpha", [](TrainConfig& c, auto& k, auto& v) { c.clamp_alpha = parse_number<double>(k, v); }},
      {"checkpoint_every", [](TrainConfig& c, auto& k, auto& v) { c.checkpoint_every = parse_number<std::uint64_t>(k, v); }},
      {"rec_input", [](TrainConfig& c, auto& k, auto& v) {
         if (v == "simulated") c.rec_from_raw_y = false;
         else if (v == "raw") c.rec_from_raw_y = true;
         else throw ConfigError("invalid value for " + k + ": '" + v + "' (expected simulated or raw)");
       }},
  };
  return table;
}

}  // namespace

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
  // Block counts follow the scale unless given explicitly.
  if (!seen.count("total_blocks") && !seen.count("enhanced_blocks")) {
    const ModelConfig standard = ModelConfig::standard(cfg.scale == 4 ? 4 : 2);
    cfg.total_blocks = standard.total_blocks;
    cfg.enhanced_blocks = standard.enhanced_blocks;
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string TrainConfig::serialize() const {
  std::ostringstream out;
  std::string qf_list;
  for (std::size_t i = 0; i < mixed_qf.size(); ++i) qf_list += (i ? "," : "") + std::to_string(mixed_qf[i]);
  out << "scale=" << scale << "\n"
      << "crop_size=" << crop_size << "\n"
      << "batch_size=" << batch_size << "\n"
      << "iterations=" << iterations << "\n"
      << "lr=" << fmt(lr) << "\n"
      << "lr_half_life=" << lr_half_life << "\n"
      << "lambda_rec=" << fmt(weights.rec) << "\n"
      << "lambda_fit=" << fmt(weights.fit) << "\n"
      << "lambda_fit_prime=" << fmt(weights.fit_prime) << "\n"
      << "lambda_reg=" << fmt(weights.reg) << "\n"
      << "lambda_rel=" << fmt(weights.rel) << "\n"
      << "train_qf=" << train_qf << "\n"
      << "mixed_qf=" << qf_list << "\n"
      << "codec=" << codec << "\n"
      << "gmm_k=" << gmm_k << "\n"
      << "gmm_init_sigma=" << fmt(gmm_init_sigma) << "\n"
      << "gmm_init_spread=" << fmt(gmm_init_spread) << "\n"
      << "gumbel_tau=" << fmt(gumbel_tau) << "\n"
      << "fourier_terms=" << fourier_terms << "\n"
      << "seed=" << seed << "\n"
      << "dataset_dir=" << dataset_dir << "\n"
      << "checkpoint_dir=" << checkpoint_dir << "\n"
      << "precision=" << to_string(precision) << "\n"
      << "total_blocks=" << total_blocks << "\n"
      << "enhanced_blocks=" << enhanced_blocks << "\n"
      << "growth=" << growth << "\n"
      << "clamp_alpha=" << fmt(clamp_alpha) << "\n"
      << "checkpoint_every=" << checkpoint_every << "\n"
      << "rec_input=" << (rec_from_raw_y ? "raw" : "simulated") << "\n";
  return out.str();
}

void TrainConfig::validate() const {
  if (scale != 2 && scale != 4) throw ConfigError("scale must be 2 or 4");
  const std::size_t m = static_cast<std::size_t>(scale) * 8;
  if (crop_size == 0 || crop_size % m != 0) {
    throw ConfigError("crop_size " + std::to_string(crop_size) + " must be a positive multiple of " +
                      std::to_string(m));
  }
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  for (double w : {weights.rec, weights.fit, weights.fit_prime, weights.reg, weights.rel}) {
    if (!(w >= 0)) throw ConfigError("loss weights must be nonnegative");
  }
  auto check_qf = [](int q) {
    if (q < 1 || q > 100) throw ConfigError("quality factor " + std::to_string(q) + " outside [1, 100]");
  };
  check_qf(train_qf);
  for (int q : mixed_qf) check_qf(q);
  if (codec != "internal-jpeg" && codec.rfind("external:", 0) != 0) {
    throw ConfigError("codec must be internal-jpeg or external:<command>");
  }
  if (codec == "external:") throw ConfigError("external codec needs a command template");
  if (gmm_k < 1) throw ConfigError("gmm_k must be at least 1");
  if (!(gmm_init_sigma > GmmParams::kSigmaFloor)) throw ConfigError("gmm_init_sigma must be positive");
  if (!(gmm_init_spread >= 0)) throw ConfigError("gmm_init_spread must be non-negative");
  if (!(gumbel_tau > 0)) throw ConfigError("gumbel_tau must be positive");
  if (fourier_terms < 1) throw ConfigError("fourier_terms must be at least 1");
  try {
    model_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.scale = scale;
  m.total_blocks = total_blocks;
  m.enhanced_blocks = enhanced_blocks;
  m.growth = growth;
  m.clamp_alpha = clamp_alpha;
  m.dtype = precision;
  return m;
}

CodecConfig TrainConfig::codec_config() const {
  CodecConfig c;
  c.qf = train_qf;
  c.fourier_terms = fourier_terms;
  return c;
}

RealCodec make_real_codec(const TrainConfig& config) {
  if (config.codec == "internal-jpeg") return internal_jpeg_codec(config.fourier_terms);
  ExternalCodecSpec spec;
  spec.command_template = config.codec.substr(std::string("external:").size());
  return external_codec(spec);
}

}  // namespace sain
