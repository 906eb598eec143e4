#include "sain/codec.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sys/wait.h>

#include "sain/autograd.hpp"
#include "sain/image_io.hpp"
#include "sain/ops.hpp"

namespace sain {

namespace {

constexpr std::array<int, 64> kBaseLuma = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kBaseChroma = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

// Full-range BT.601 RGB -> YCbCr, chroma centred on zero.
constexpr double kRgbToYcc[3][3] = {{0.299, 0.587, 0.114},
                                    {-0.168736, -0.331264, 0.5},
                                    {0.5, -0.418688, -0.081312}};

// Exact inverse of kRgbToYcc.
std::array<std::array<double, 3>, 3> ycc_to_rgb_matrix() {
  const auto& m = kRgbToYcc;
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  std::array<std::array<double, 3>, 3> inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

const std::array<std::array<double, 3>, 3>& kYccToRgb() {
  static const auto inv = ycc_to_rgb_matrix();
  return inv;
}

// basis[u][x] = a(u) cos((2x+1) u pi / 16)
const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> b{};
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) b[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return b;
  }();
  return basis;
}

// Soft clamp sharpness in gray levels; worst-case deviation at the rails is ln2/4.
constexpr double kClampSharpness = 4.0;

double softplus_sharp(double t) {
  const double s = kClampSharpness * t;
  const double sp = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  return sp / kClampSharpness;
}

double sigmoid_sharp(double t) {
  const double s = kClampSharpness * t;
  return s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

Tensor soft_clamp_255(const Tensor& x) {
  return elementwise_map(
      "soft_clamp", x,
      [](double v) { return v - softplus_sharp(v - 255.0) + softplus_sharp(-v); },
      [](double v, double) { return 1.0 - sigmoid_sharp(v - 255.0) - sigmoid_sharp(-v); });
}

void check_image(const char* op, const Tensor& img) {
  const Shape s = img.shape();
  if (s.c != 3) throw ShapeError(std::string(op) + ": expected 3 channels, got " + s.str());
  if (s.h % 8 != 0 || s.w % 8 != 0 || s.h == 0 || s.w == 0) {
    throw ShapeError(std::string(op) + ": height and width must be multiples of 8, got " +
                     std::to_string(s.h) + "x" + std::to_string(s.w));
  }
}

const std::array<int, 64>& table_for(const QuantTables& t, std::size_t channel) {
  return channel == 0 ? t.luma : t.chroma;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out += ch;
    }
  }
  return out + "'";
}

void replace_all(std::string& text, const std::string& key, const std::string& value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos;
       pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "sain-codec-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw CodecError("cannot create temporary directory", "");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

const QuantTables& base_quant_tables() {
  static const QuantTables tables{kBaseLuma, kBaseChroma};
  return tables;
}

QuantTables qf_to_tables(int qf) {
  if (qf < 1 || qf > 100) {
    throw std::invalid_argument("quality factor " + std::to_string(qf) + " outside [1, 100]");
  }
  const int scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
  auto scaled = [scale](const std::array<int, 64>& base) {
    std::array<int, 64> out{};
    for (std::size_t i = 0; i < 64; ++i) out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
    return out;
  };
  return {scaled(kBaseLuma), scaled(kBaseChroma)};
}

void CodecConfig::validate() const {
  if (qf < 1 || qf > 100) {
    throw std::invalid_argument("quality factor " + std::to_string(qf) + " outside [1, 100]");
  }
  if (fourier_terms < 1) throw std::invalid_argument("fourier_terms must be >= 1");
}

Block8 dct8x8(const Block8& block) {
  const auto& b = dct_basis();
  Block8 tmp{};
  Block8 out{};
  // rows: tmp[x][v] = sum_y block[x][y] b[v][y]
  for (int x = 0; x < 8; ++x)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += block[x * 8 + y] * b[v][y];
      tmp[x * 8 + v] = s;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += b[u][x] * tmp[x * 8 + v];
      out[u * 8 + v] = s;
    }
  return out;
}

Block8 idct8x8(const Block8& coefficients) {
  const auto& b = dct_basis();
  Block8 tmp{};
  Block8 out{};
  for (int u = 0; u < 8; ++u)
    for (int y = 0; y < 8; ++y) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += coefficients[u * 8 + v] * b[v][y];
      tmp[u * 8 + y] = s;
    }
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[u][x] * tmp[u * 8 + y];
      out[x * 8 + y] = s;
    }
  return out;
}

Tensor fourier_round(const Tensor& x, int terms) {
  if (terms < 1) throw std::invalid_argument("fourier_round: terms must be >= 1");
  // The series is 1-periodic in x, so it is evaluated on the fractional
  // offset; integers then map to themselves exactly.
  return elementwise_map(
      "fourier_round", x,
      [terms](double v) {
        const double frac = v - std::round(v);
        double series = 0.0;
        for (int k = 1; k <= terms; ++k) {
          const double sign = (k % 2 == 1) ? 1.0 : -1.0;
          series += sign * std::sin(2.0 * std::numbers::pi * k * frac) / (k * std::numbers::pi);
        }
        return v - series;
      },
      [terms](double v, double) {
        const double frac = v - std::round(v);
        double series = 0.0;
        for (int k = 1; k <= terms; ++k) {
          const double sign = (k % 2 == 1) ? 1.0 : -1.0;
          series += sign * 2.0 * std::cos(2.0 * std::numbers::pi * k * frac);
        }
        return 1.0 - series;
      });
}

Tensor simulate_jpeg(const Tensor& img, const CodecConfig& config) {
  config.validate();
  check_image("simulate_jpeg", img);
  const DType dt = img.dtype();
  const QuantTables tables = qf_to_tables(config.qf);
  const auto& basis = dct_basis();
  const auto& inv_color = kYccToRgb();

  std::vector<double> color_w(9);
  std::vector<double> color_inv_w(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      color_w[r * 3 + c] = kRgbToYcc[r][c];
      color_inv_w[r * 3 + c] = inv_color[r][c];
    }
  // Y is level-shifted by -128; centred chroma needs no shift.
  const std::vector<double> color_b{-128.0, 0.0, 0.0};
  std::vector<double> color_inv_b(3);
  for (int r = 0; r < 3; ++r) color_inv_b[r] = inv_color[r][0] * 128.0;

  constexpr std::size_t kCh = 3 * 64;
  std::vector<double> fwd(kCh * kCh, 0.0);
  std::vector<double> inv(kCh * kCh, 0.0);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const auto& q = table_for(tables, ch);
    for (int u = 0; u < 8; ++u)
      for (int v = 0; v < 8; ++v)
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) {
            const std::size_t coef = ch * 64 + u * 8 + v;
            const std::size_t pix = ch * 64 + i * 8 + j;
            const double b = basis[u][i] * basis[v][j];
            fwd[coef * kCh + pix] = b / q[u * 8 + v];
            inv[pix * kCh + coef] = b * q[u * 8 + v];
          }
  }

  const Tensor w_color = Tensor::from_vector({3, 3, 1, 1}, color_w, dt);
  const Tensor b_color = Tensor::from_vector({1, 3, 1, 1}, color_b, dt);
  const Tensor w_color_inv = Tensor::from_vector({3, 3, 1, 1}, color_inv_w, dt);
  const Tensor b_color_inv = Tensor::from_vector({1, 3, 1, 1}, color_inv_b, dt);
  const Tensor w_fwd = Tensor::from_vector({kCh, kCh, 1, 1}, fwd, dt);
  const Tensor w_inv = Tensor::from_vector({kCh, kCh, 1, 1}, inv, dt);

  Tensor ycc = conv2d(img, w_color, b_color, 0);
  Tensor scaled = conv2d(space_to_depth(ycc, 8), w_fwd, Tensor(), 0);
  Tensor rounded = fourier_round(scaled, config.fourier_terms);
  Tensor pixels = depth_to_space(conv2d(rounded, w_inv, Tensor(), 0), 8);
  return soft_clamp_255(conv2d(pixels, w_color_inv, b_color_inv, 0));
}

Tensor real_jpeg(const Tensor& img, const CodecConfig& config) {
  config.validate();
  check_image("real_jpeg", img);
  const Shape s = img.shape();
  const QuantTables tables = qf_to_tables(config.qf);
  const auto& inv_color = kYccToRgb();
  const auto in = img.to_vector();
  std::vector<double> out(in.size());
  std::vector<double> ycc(3 * s.plane());

  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t p = 0; p < s.plane(); ++p) {
      double rgb[3];
      for (std::size_t c = 0; c < 3; ++c) {
        rgb[c] = std::clamp(std::round(in[(n * 3 + c) * s.plane() + p]), 0.0, 255.0);
      }
      for (std::size_t r = 0; r < 3; ++r) {
        ycc[r * s.plane() + p] =
            kRgbToYcc[r][0] * rgb[0] + kRgbToYcc[r][1] * rgb[1] + kRgbToYcc[r][2] * rgb[2];
      }
      ycc[p] -= 128.0;
    }
    for (std::size_t c = 0; c < 3; ++c) {
      const auto& q = table_for(tables, c);
      double* plane = ycc.data() + c * s.plane();
      for (std::size_t by = 0; by < s.h; by += 8)
        for (std::size_t bx = 0; bx < s.w; bx += 8) {
          Block8 block{};
          for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) block[i * 8 + j] = plane[(by + i) * s.w + bx + j];
          Block8 coef = dct8x8(block);
          for (std::size_t k = 0; k < 64; ++k) coef[k] = std::round(coef[k] / q[k]) * q[k];
          const Block8 rec = idct8x8(coef);
          for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) plane[(by + i) * s.w + bx + j] = rec[i * 8 + j];
        }
    }
    for (std::size_t p = 0; p < s.plane(); ++p) {
      const double y = ycc[p] + 128.0;
      const double cb = ycc[s.plane() + p];
      const double cr = ycc[2 * s.plane() + p];
      for (std::size_t r = 0; r < 3; ++r) {
        const double v = inv_color[r][0] * y + inv_color[r][1] * cb + inv_color[r][2] * cr;
        out[(n * 3 + r) * s.plane() + p] = std::round(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return Tensor::from_vector(s, out, img.dtype());
}

Tensor ste_quantize_8bit(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<class T>() {
    auto in = x.data<T>();
    auto o = out.mutable_data<T>();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double v = std::clamp(static_cast<double>(in[i]), 0.0, 1.0);
      o[i] = static_cast<T>(std::round(255.0 * v) / 255.0);
    }
  });
  if (!needs_graph({x})) return out;
  Tensor saved = x.detach();
  return record_op("ste_quantize_8bit", out, {x}, [saved](const Tensor& g) {
    Tensor gx = Tensor::zeros(saved.shape(), saved.dtype());
    dispatch(saved.dtype(), [&]<class T>() {
      auto in = saved.data<T>();
      auto gd = g.data<T>();
      auto o = gx.mutable_data<T>();
      for (std::size_t i = 0; i < in.size(); ++i) o[i] = (in[i] >= T(0) && in[i] <= T(1)) ? gd[i] : T(0);
    });
    return std::vector<Tensor>{gx};
  });
}

Tensor external_codec_roundtrip(const Tensor& img, const ExternalCodecSpec& spec, int quality) {
  const Shape s = img.shape();
  if (s.c != 3) throw ShapeError("external codec: expected 3 channels, got " + s.str());
  if (spec.command_template.empty()) throw CodecError("external codec: empty command template", "");

  const Shape item{1, 3, s.h, s.w};
  const auto values = img.to_vector();
  std::vector<double> result;
  result.reserve(values.size());

  TempDir tmp;
  for (std::size_t n = 0; n < s.n; ++n) {
    const auto in_path = tmp.path() / ("in" + std::to_string(n) + ".png");
    const auto out_path = tmp.path() / ("out" + std::to_string(n) + ".png");
    const auto scratch = tmp.path() / ("scratch" + std::to_string(n));
    write_png(in_path, Tensor::from_vector(
                           item, std::span<const double>(values).subspan(n * item.numel(), item.numel())));

    std::string command = spec.command_template;
    replace_all(command, "{IN}", shell_quote(in_path.string()));
    replace_all(command, "{OUT}", shell_quote(out_path.string()));
    replace_all(command, "{TMP}", shell_quote(scratch.string()));
    replace_all(command, "{Q}", std::to_string(quality));

    std::string full;
    if (!spec.working_directory.empty()) full += "cd " + shell_quote(spec.working_directory.string()) + " && ";
    if (const char* extra = std::getenv(kCodecPathEnv)) {
      full += "PATH=" + shell_quote(std::string(extra)) + ":\"$PATH\"; export PATH; ";
    }
    full += "( " + command + " ) 2>&1";

    std::string output;
    FILE* pipe = ::popen(full.c_str(), "r");
    if (!pipe) throw CodecError("external codec: cannot launch command", "");
    std::array<char, 4096> chunk{};
    while (std::size_t got = std::fread(chunk.data(), 1, chunk.size(), pipe)) output.append(chunk.data(), got);
    const int status = ::pclose(pipe);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw CodecError("external codec command failed (exit status " +
                           std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) + ")",
                       output);
    }
    if (!std::filesystem::exists(out_path)) {
      throw CodecError("external codec produced no output image", output);
    }
    Tensor decoded;
    try {
      decoded = read_png(out_path);
    } catch (const ImageIoError& e) {
      throw CodecError(std::string("external codec output unreadable: ") + e.what(), output);
    }
    if (decoded.shape() != item) {
      throw CodecError("external codec changed image size from " + item.str() + " to " +
                           decoded.shape().str(),
                       output);
    }
    const auto dv = decoded.to_vector();
    result.insert(result.end(), dv.begin(), dv.end());
  }
  return Tensor::from_vector(s, result, img.dtype());
}

RealCodec internal_jpeg_codec(int fourier_terms) {
  return [fourier_terms](const Tensor& img, int qf) {
    CodecConfig cfg;
    cfg.qf = qf;
    cfg.fourier_terms = fourier_terms;
    return real_jpeg(img, cfg);
  };
}

RealCodec external_codec(ExternalCodecSpec spec) {
  return [spec = std::move(spec)](const Tensor& img, int qf) {
    return external_codec_roundtrip(img, spec, qf);
  };
}

}  // namespace sain
