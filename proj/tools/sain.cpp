// Command-line front end: train, downscale, upscale, simulate, eval.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sain/codec.hpp"
#include "sain/dataset.hpp"
#include "sain/eval.hpp"
#include "sain/image_io.hpp"
#include "sain/ops.hpp"
#include "sain/train.hpp"

namespace {

std::vector<int> parse_qf_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int q = 0;
    try {
      q = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || q < 1 || q > 100) {
      throw std::invalid_argument("invalid quality factor '" + item + "' in --qf-list");
    }
    out.push_back(q);
  }
  if (out.empty()) throw std::invalid_argument("--qf-list is empty");
  return out;
}

int cmd_train(const std::string& config_path, const std::string& resume, bool quiet) {
  const sain::TrainConfig cfg = sain::TrainConfig::load(config_path);
  sain::TrainOptions opts;
  if (!resume.empty()) opts.resume = resume;
  opts.log = quiet ? nullptr : &std::cerr;
  const auto result = sain::train(cfg, opts);
  std::cout << "trained to iteration " << result.state.iteration << "; checkpoint "
            << result.checkpoint.string() << "\n";
  return 0;
}

int cmd_downscale(const std::string& ckpt, const std::string& in, const std::string& out, int compress) {
  const auto state = sain::load_checkpoint(ckpt);
  const sain::Tensor hr = sain::read_png(in, state.config.precision);
  const sain::Tensor lr = sain::sain_downscale(state.model, hr);
  sain::write_png(out, lr);
  if (compress > 0) {
    if (compress > 100) throw std::invalid_argument("--compress must be in [1, 100]");
    const sain::RealCodec codec = sain::make_real_codec(state.config);
    std::filesystem::path distorted(out);
    distorted.replace_filename(distorted.stem().string() + "_jpeg" + std::to_string(compress) + ".png");
    sain::write_png(distorted, codec(lr, compress));
    std::cout << "wrote " << out << " and " << distorted.string() << "\n";
  } else {
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_upscale(const std::string& ckpt, const std::string& in, const std::string& out,
                std::uint64_t seed) {
  const auto state = sain::load_checkpoint(ckpt);
  const sain::Tensor lr = sain::read_png(in, state.config.precision);
  sain::Rng rng(seed);
  sain::write_png(out, sain::sain_upscale(state.model, state.gmm, lr, state.config.gumbel_tau, rng));
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_simulate(int qf, const std::string& in, const std::string& out, bool real, int terms) {
  sain::CodecConfig cfg;
  cfg.qf = qf;
  cfg.fourier_terms = terms;
  cfg.validate();
  const sain::Tensor img = sain::read_png(in);
  sain::NoGradGuard no_grad;
  sain::write_png(out, real ? sain::real_jpeg(img, cfg) : sain::simulate_jpeg(img, cfg));
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& hr_dir, const std::string& qf_list,
             std::uint64_t seed, std::size_t border, bool csv) {
  const auto state = sain::load_checkpoint(ckpt);
  sain::EvalOptions opts;
  opts.qfs = parse_qf_list(qf_list);
  opts.seed = seed;
  opts.tau = state.config.gumbel_tau;
  opts.border = border;
  std::vector<sain::Tensor> images;
  for (const auto& p : sain::list_pngs(hr_dir)) images.push_back(sain::read_png(p, state.config.precision));
  if (images.empty()) throw std::runtime_error("no PNG images in " + hr_dir);
  const auto rows = sain::evaluate(state.model, state.gmm, images, sain::make_real_codec(state.config), opts);
  std::cout << (csv ? sain::format_eval_csv(rows) : sain::format_eval_markdown(rows, opts.qfs));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compression-aware invertible image rescaling"};
  app.require_subcommand(1);

  std::string config, resume, ckpt, in, out, hr_dir, qf_list = "30,50,70,80,90";
  bool quiet = false, real = false, csv = false;
  int compress = 0, qf = 75, terms = 10;
  std::uint64_t seed = 0;
  std::size_t border = 0;

  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config, "key=value config file")->required();
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_flag("--quiet", quiet, "suppress progress lines");

  auto* down = app.add_subcommand("downscale", "Write the model's LR image");
  down->add_option("--ckpt", ckpt)->required();
  down->add_option("--in", in)->required();
  down->add_option("--out", out)->required();
  down->add_option("--compress", compress, "also write the real-codec LR at this QF");

  auto* up = app.add_subcommand("upscale", "Restore an HR image from an LR image");
  up->add_option("--ckpt", ckpt)->required();
  up->add_option("--in", in)->required();
  up->add_option("--out", out)->required();
  up->add_option("--seed", seed, "latent sampling seed");

  auto* sim = app.add_subcommand("simulate", "Apply the differentiable or the reference JPEG codec");
  sim->add_option("--qf", qf)->required();
  sim->add_option("--in", in)->required();
  sim->add_option("--out", out)->required();
  sim->add_flag("--real", real, "use the reference codec");
  sim->add_option("--fourier-terms", terms);

  auto* ev = app.add_subcommand("eval", "PSNR/SSIM table over a directory of HR images");
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--hr-dir", hr_dir)->required();
  ev->add_option("--qf-list", qf_list);
  ev->add_option("--seed", seed);
  ev->add_option("--border", border, "pixels cropped per side (default: scale)");
  ev->add_flag("--csv", csv, "CSV instead of a markdown table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "sain: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*train) return cmd_train(config, resume, quiet);
    if (*down) return cmd_downscale(ckpt, in, out, compress);
    if (*up) return cmd_upscale(ckpt, in, out, seed);
    if (*sim) return cmd_simulate(qf, in, out, real, terms);
    if (*ev) return cmd_eval(ckpt, hr_dir, qf_list, seed, border, csv);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    if (const auto* ce = dynamic_cast<const sain::CodecError*>(&e); ce && !ce->output().empty()) {
      std::string first = ce->output().substr(0, ce->output().find('\n'));
      msg += " (" + first + ")";
    }
    std::cerr << "sain: error: " << msg << "\n";
    return 1;
  }
  return 1;
}
