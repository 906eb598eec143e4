#include "sain/eval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "sain/metrics.hpp"
#include "sain/ops.hpp"
#include "sain/resize.hpp"

namespace sain {

Tensor crop_to_multiple(const Tensor& img, std::size_t multiple) {
  const Shape s = img.shape();
  const std::size_t h = s.h / multiple * multiple;
  const std::size_t w = s.w / multiple * multiple;
  if (h == 0 || w == 0) {
    throw ShapeError("image " + s.str() + " is smaller than " + std::to_string(multiple) + " pixels");
  }
  const Shape os{s.n, s.c, h, w};
  std::vector<double> out(os.numel());
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) out[os.index(n, c, i, j)] = img.at(n, c, i, j);
  return Tensor::from_vector(os, out, img.dtype());
}

Tensor to_8bit(const Tensor& img255) {
  auto v = img255.to_vector();
  for (double& x : v) x = std::clamp(std::round(x), 0.0, 255.0);
  return Tensor::from_vector(img255.shape(), v, img255.dtype());
}

Tensor sain_downscale(const SainModel& model, const Tensor& hr255) {
  NoGradGuard no_grad;
  const Tensor x = scale(hr255.to(model.config().dtype), 1.0 / 255.0);
  return to_8bit(scale(model.forward(x, true).y, 255.0));
}

Tensor sain_upscale(const SainModel& model, const GmmParams& gmm, const Tensor& lr255, double tau,
                    Rng& rng) {
  NoGradGuard no_grad;
  const Shape s = lr255.shape();
  if (s.c != model.lf_channels()) throw ShapeError("LR image must have 3 channels, got " + s.str());
  const Tensor y = scale(lr255.to(model.config().dtype), 1.0 / 255.0);
  const Tensor z = gmm_sample(gmm, {s.n, model.hf_channels(), s.h, s.w}, tau, rng);
  return to_8bit(scale(model.inverse(y, z).x, 255.0));
}

Tensor sain_roundtrip(const SainModel& model, const GmmParams& gmm, const Tensor& hr255,
                      const RealCodec& codec, int qf, double tau, Rng& rng) {
  Tensor lr = sain_downscale(model, hr255);
  if (qf > 0) lr = codec(lr, qf);
  return sain_upscale(model, gmm, lr, tau, rng);
}

Tensor bicubic_roundtrip(const Tensor& hr255, int scale_factor, const RealCodec& codec, int qf) {
  Tensor lr = to_8bit(bicubic_resize(hr255, 1.0 / scale_factor, true));
  if (qf > 0) lr = codec(lr, qf);
  return to_8bit(bicubic_resize(lr, static_cast<double>(scale_factor), true));
}

std::vector<EvalRow> evaluate(const SainModel& model, const GmmParams& gmm,
                              const std::vector<Tensor>& hr_images, const RealCodec& codec,
                              const EvalOptions& options) {
  if (hr_images.empty()) throw std::runtime_error("evaluate: no images");
  const int s = model.config().scale;
  const std::size_t border = options.border ? options.border : static_cast<std::size_t>(s);
  std::vector<EvalRow> rows;
  for (const char* method : {kBicubicMethod, kSainMethod}) {
    const bool is_model = std::string(method) == kSainMethod;
    for (int qf : options.qfs) {
      double psnr = 0, ssim = 0;
      for (std::size_t i = 0; i < hr_images.size(); ++i) {
        const Tensor hr = crop_to_multiple(hr_images[i], static_cast<std::size_t>(s) * 8);
        Tensor out;
        if (is_model) {
          Rng rng = Rng::derive(options.seed, {i, static_cast<std::uint64_t>(qf)});
          out = sain_roundtrip(model, gmm, hr, codec, qf, options.tau, rng);
        } else {
          out = bicubic_roundtrip(hr, s, codec, qf);
        }
        psnr += psnr_y(out, hr, border);
        ssim += ssim_y(out, hr, border);
      }
      const double n = static_cast<double>(hr_images.size());
      rows.push_back({method, qf, psnr / n, ssim / n});
    }
  }
  return rows;
}

std::string format_eval_markdown(const std::vector<EvalRow>& rows, const std::vector<int>& qfs) {
  std::ostringstream out;
  out << "| Method |";
  for (int q : qfs) out << " QF=" << q << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < qfs.size(); ++i) out << "---|";
  out << "\n";
  std::vector<std::string> order;
  std::map<std::string, std::map<int, const EvalRow*>> table;
  for (const auto& r : rows) {
    if (!table.count(r.method)) order.push_back(r.method);
    table[r.method][r.qf] = &r;
  }
  char cell[64];
  for (const auto& m : order) {
    out << "| " << m << " |";
    for (int q : qfs) {
      const auto it = table[m].find(q);
      if (it == table[m].end()) {
        out << " - |";
        continue;
      }
      std::snprintf(cell, sizeof cell, " %.2f / %.4f |", it->second->psnr, it->second->ssim);
      out << cell;
    }
    out << "\n";
  }
  return out.str();
}

std::string format_eval_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "method,qf,psnr_y,ssim_y\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%d,%.6f,%.6f\n", r.method.c_str(), r.qf, r.psnr, r.ssim);
    out << line;
  }
  return out.str();
}

}  // namespace sain
