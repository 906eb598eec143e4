#include "op_cases.hpp"

#include "sain/codec.hpp"
#include "sain/gmm.hpp"
#include "sain/invnet.hpp"
#include "sain/ops.hpp"
#include "sain/wavelet.hpp"

namespace sain::testing {

namespace {

using Binary = std::function<Tensor(const Tensor&, const Tensor&)>;

// Inputs are drawn from [lo, hi) to stay clear of kinks and poles.
OpCase elementwise(std::string name, Binary op, double lo, double hi) {
  return {name, [op, lo, hi](Rng& rng) {
            Tensor a = random_tensor({2, 3, 3, 2}, rng, lo, hi, true);
            Tensor b = random_tensor({2, 3, 3, 2}, rng, lo, hi, true);
            const Tensor w = random_tensor({2, 3, 3, 2}, rng);
            auto loss = [&] {
              Tensor out = op(a, b);
              if (out.numel() == 1) return out;
              return sum(mul(out, w.shape() == out.shape() ? w : Tensor::full(out.shape(), 0.7)));
            };
            return gradcheck(loss, {a, b}, 1e-6, 1e-6, {"a", "b"});
          }};
}

// Weighted sum of a unary op's output over one random input.
OpCase unary(std::string name, Shape in, std::function<Tensor(const Tensor&)> op, double lo = -1,
             double hi = 1, double step = 1e-6) {
  return {name, [in, op, lo, hi, step](Rng& rng) {
            Tensor a = random_tensor(in, rng, lo, hi, true);
            const Shape out = op(a.detach()).shape();
            const Tensor w = random_tensor(out, rng);
            return gradcheck([&] { return sum(mul(op(a), w)); }, {a}, step, 1e-6);
          }};
}

}  // namespace

std::vector<OpCase> op_gradient_cases() {
  std::vector<OpCase> cases{
      elementwise("add", [](auto& a, auto& b) { return add(a, b); }, -1, 1),
      elementwise("sub", [](auto& a, auto& b) { return sub(a, b); }, -1, 1),
      elementwise("mul", [](auto& a, auto& b) { return mul(a, b); }, -1, 1),
      elementwise("div", [](auto& a, auto& b) { return div(a, b); }, 0.5, 2),
      elementwise("neg", [](auto& a, auto&) { return neg(a); }, -1, 1),
      elementwise("scale", [](auto& a, auto&) { return scale(a, -2.5); }, -1, 1),
      elementwise("add_scalar", [](auto& a, auto&) { return add_scalar(a, 3.0); }, -1, 1),
      elementwise("exp", [](auto& a, auto&) { return exp(a); }, -1, 1),
      elementwise("log", [](auto& a, auto&) { return log(a); }, 0.5, 2),
      elementwise("sigmoid", [](auto& a, auto&) { return sigmoid(a); }, -3, 3),
      elementwise("leaky_relu", [](auto& a, auto&) { return leaky_relu(a, 0.2); }, 0.1, 1),
      elementwise("leaky_relu_neg", [](auto& a, auto&) { return leaky_relu(a, 0.2); }, -1, -0.1),
      elementwise("softplus", [](auto& a, auto&) { return softplus(a); }, -3, 3),
      elementwise("square", [](auto& a, auto&) { return square(a); }, -1, 1),
      elementwise("abs", [](auto& a, auto&) { return abs(a); }, 0.1, 1),
      elementwise("abs_neg", [](auto& a, auto&) { return abs(a); }, -1, -0.1),
      elementwise("sum", [](auto& a, auto&) { return sum(a); }, -1, 1),
      elementwise("mean", [](auto& a, auto&) { return mean(square(a)); }, -1, 1),
      elementwise("expand", [](auto& a, auto&) { return expand(mean(a), {2, 3, 3, 2}); }, -1, 1),
      elementwise("slice", [](auto& a, auto&) { return slice_channels(a, 1, 2); }, -1, 1),
      elementwise("concat", [](auto& a, auto& b) { return concat_channels({a, b}); }, -1, 1),
      elementwise("gather", [](auto& a, auto&) { return gather_channels(a, {2, 0, 1}); }, -1, 1),
      unary("space_to_depth", {1, 2, 4, 4}, [](const Tensor& a) { return space_to_depth(a, 2); }),
      unary("depth_to_space", {1, 8, 2, 2}, [](const Tensor& a) { return depth_to_space(a, 2); }),
      unary("clamp_scale", {1, 3, 3, 3}, [](const Tensor& a) { return clamp_scale(a, 1.0); }, -4, 4),
      unary("fourier_round", {1, 2, 3, 3}, [](const Tensor& a) { return fourier_round(a, 10); }, -3, 3),
      unary("simulate_jpeg", {1, 3, 8, 8},
            [](const Tensor& a) {
              CodecConfig c;
              c.qf = 75;
              return simulate_jpeg(a, c);
            },
            40, 215, 1e-5),
      unary("haar_x2", {1, 3, 4, 4}, [](const Tensor& a) { return HaarStack::for_scale(2).forward(a); }),
      unary("haar_x4", {1, 3, 4, 4}, [](const Tensor& a) { return HaarStack::for_scale(4).forward(a); }),
      unary("haar_inverse", {1, 12, 2, 2}, [](const Tensor& a) { return HaarStack::for_scale(2).inverse(a); }),
  };
  cases.push_back({"conv2d", [](Rng& rng) {
                     Tensor x = random_tensor({2, 2, 4, 4}, rng, -1, 1, true);
                     Tensor w = random_tensor({3, 2, 3, 3}, rng, -1, 1, true);
                     Tensor b = random_tensor({1, 3, 1, 1}, rng, -1, 1, true);
                     const Tensor up = random_tensor({2, 3, 4, 4}, rng);
                     return gradcheck([&] { return sum(mul(conv2d(x, w, b, 1), up)); }, {x, w, b}, 1e-6, 1e-6,
                                      {"input", "weight", "bias"});
                   }});
  cases.push_back({"conv2d_1x1", [](Rng& rng) {
                     Tensor x = random_tensor({1, 4, 3, 3}, rng, -1, 1, true);
                     Tensor w = random_tensor({2, 4, 1, 1}, rng, -1, 1, true);
                     const Tensor up = random_tensor({1, 2, 3, 3}, rng);
                     return gradcheck([&] { return sum(mul(conv2d(x, w, Tensor(), 0), up)); }, {x, w}, 1e-6, 1e-6,
                                      {"input", "weight"});
                   }});
  cases.push_back({"gmm_sample", [](Rng& rng) {
                     GmmParams p = GmmParams::initial(3);
                     p.means = random_tensor({1, 3, 1, 1}, rng, -1, 1, true);
                     p.raw_scales = random_tensor({1, 3, 1, 1}, rng, -1, 1, true);
                     const Tensor w = random_tensor({1, 2, 3, 3}, rng);
                     const std::uint64_t seed = rng.next_u64();
                     auto loss = [&] {
                       Rng draw(seed);
                       return sum(mul(gmm_sample(p, {1, 2, 3, 3}, 1.0, draw), w));
                     };
                     return gradcheck(loss, {p.means, p.raw_scales}, 1e-6, 1e-6, {"means", "raw_scales"});
                   }});
  return cases;
}

}  // namespace sain::testing
