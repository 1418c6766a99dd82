#include "dikd/gradcheck_suite.hpp"

#include <functional>

#include "dikd/adaptive_conv.hpp"
#include "dikd/gradcheck.hpp"
#include "dikd/losses.hpp"
#include "dikd/mask.hpp"
#include "dikd/networks.hpp"
#include "dikd/ops.hpp"

namespace dikd {

namespace {

using D = double;
using Tensor = TensorT<D>;
using Fn = std::function<Tensor(std::vector<Tensor>&)>;

Tensor random_tensor(Rng& rng, Shape shape, bool rg = true,
                     double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape), rg);
  for (D& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

Tensor random_binary_mask(Rng& rng, int h, int w) {
  Tensor t = Tensor::zeros({1, h, w});
  for (D& v : t.data()) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return t;
}

constexpr double kEps = 1e-3;

// Runs `make_case` `instances` times, each producing (f, inputs).
SuiteEntry run_op(const std::string& name, int instances, uint64_t seed,
                  const std::function<void(Rng&, Fn&, std::vector<Tensor>&)>&
                      make_case,
                  int coords = 0) {
  SuiteEntry e;
  e.op = name;
  Rng rng(seed ^ hash_name(name));
  for (int i = 0; i < instances; ++i) {
    Fn f;
    std::vector<Tensor> inputs;
    make_case(rng, f, inputs);
    const auto rep = gradcheck<D>(f, inputs, kEps, coords, rng.next_u64());
    e.max_rel_err = std::max(e.max_rel_err, rep.worst);
    ++e.instances;
  }
  return e;
}

// A tiny but complete training step loss on random data, checked w.r.t.
// every student parameter.
SuiteEntry full_model_case(int instances, uint64_t seed, int coords_per_param) {
  SuiteEntry e;
  e.op = "full_model";
  Rng rng(seed ^ hash_name(e.op));
  NetworkConfig ncfg;
  ncfg.levels = 2;
  ncfg.base_channels = 4;
  ncfg.input_size = 16;
  ncfg.kernel_size = 3;
  ncfg.filler_enabled = true;

  for (int i = 0; i < instances; ++i) {
    auto teacher = TeacherAE<D>::make(ncfg, rng.next_u64());
    auto student = StudentNet<D>::make(ncfg, rng.next_u64());
    // The offset generators start at zero, which would put every bilinear
    // sample exactly on the interpolation kink at integer positions. Bias
    // them to a fractional constant so the check probes a smooth point.
    for (auto& fb : student.fill)
      for (auto* layer : {&fb.ac1, &fb.ac2})
        for (D& b : layer->ogen2.b.data())
          b = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.3, 0.45);
    Params<D> sparams;
    student.collect(sparams);

    Tensor gt = random_tensor(rng, {3, 16, 16}, false, 0.0, 1.0);
    const Mask m = generate_irregular_mask(rng.next_u64(), 16, 16, 0.2, 0.4);
    const MaskPyramid pyr = build_mask_pyramid(m, ncfg.levels);
    std::vector<Tensor> level_masks;
    for (const Mask& lm : pyr.levels) level_masks.push_back(lm.to_tensor<D>());
    Tensor full_mask = m.to_tensor<D>();
    std::vector<D> in4(size_t(4) * 16 * 16);
    for (int c = 0; c < 3; ++c)
      for (size_t j = 0; j < 256; ++j)
        in4[size_t(c) * 256 + j] =
            m.grid[j] ? 0.0 : gt.data()[size_t(c) * 256 + j];
    for (size_t j = 0; j < 256; ++j) in4[3 * 256 + j] = D(m.grid[j]);
    Tensor input = Tensor::from({4, 16, 16}, std::move(in4));

    auto [teacher_feats, teacher_recon] = teacher.forward(gt, /*frozen=*/true);

    // The self-distillation target is detached during training, so the
    // training gradient is a partial derivative with the deeper feature
    // held fixed. Freeze those targets at the unperturbed parameter point,
    // otherwise finite differences would also see the target moving.
    std::vector<Tensor> frozen_deeper;
    Tensor rec_target;
    {
      NoGradGuard ng;
      auto ref = student.encode(input, level_masks);
      for (int l = 1; l < ncfg.levels; ++l) {
        std::vector<D> copy = ref[size_t(l)].data();
        frozen_deeper.push_back(
            Tensor::from(ref[size_t(l)].shape(), std::move(copy)));
      }
      // |pred - target| has a kink where the difference crosses zero. Probe
      // the L1 terms at a smooth point by placing the target half a unit
      // away from the current prediction on a random side.
      Tensor pred0 = student.decode(ref.back());
      std::vector<D> tgt = pred0.data();
      for (D& v : tgt) v += rng.uniform() < 0.5 ? -0.5 : 0.5;
      rec_target = Tensor::from(pred0.shape(), std::move(tgt));
    }

    LossWeights w;  // defaults 6/1/1/1
    Fn f = [&, input, gt, full_mask, level_masks, frozen_deeper,
            teacher_feats](std::vector<Tensor>&) -> Tensor {
      std::vector<Tensor> feats = student.encode(input, level_masks);
      Tensor pred = student.decode(feats.back());
      LossParts<D> parts;
      auto [hole, valid] = reconstruction_loss(pred, rec_target, full_mask);
      parts.rec_hole = hole;
      parts.rec_valid = valid;
      for (int l = 0; l < ncfg.levels; ++l)
        parts.cross.push_back(cross_distill_loss(
            feats[size_t(l)], teacher_feats[size_t(l)], level_masks[size_t(l)],
            student.rho[size_t(l)](teacher_feats[size_t(l)])));
      for (int l = 0; l < ncfg.levels - 1; ++l) {
        const Tensor& deeper = frozen_deeper[size_t(l)];
        parts.self.push_back(self_distill_loss(
            feats[size_t(l)], deeper, level_masks[size_t(l) + 1],
            student.phi[size_t(l)](deeper), student.align_conv[size_t(l)]));
      }
      return total_loss(parts, w).first;
    };

    std::vector<Tensor> inputs;
    for (auto& [name, p] : sparams) inputs.push_back(p);
    const auto rep = gradcheck<D>(f, inputs, kEps, coords_per_param,
                                  rng.next_u64());
    e.max_rel_err = std::max(e.max_rel_err, rep.worst);
    ++e.instances;
  }
  return e;
}

}  // namespace

std::vector<SuiteEntry> run_gradcheck_suite(int instances, uint64_t seed) {
  std::vector<SuiteEntry> out;

  out.push_back(run_op("conv2d", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         const int cin = 1 + rng.uniform_int(3);
                         const int cout = 1 + rng.uniform_int(3);
                         const int k = rng.uniform() < 0.5 ? 1 : 3;
                         const int stride = 1 + rng.uniform_int(2);
                         in = {random_tensor(rng, {cin, 6, 7}),
                               random_tensor(rng, {cout, cin, k, k}),
                               random_tensor(rng, {cout})};
                         f = [stride, k](std::vector<Tensor>& v) {
                           return sum(mul(conv2d(v[0], v[1], v[2], stride,
                                                 (k - 1) / 2),
                                          conv2d(v[0], v[1], v[2], stride,
                                                 (k - 1) / 2)));
                         };
                       }));

  out.push_back(run_op("upsample_nearest", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         const int c = 1 + rng.uniform_int(3);
                         const int factor = 1 + rng.uniform_int(3);
                         in = {random_tensor(rng, {c, 3, 4})};
                         f = [factor](std::vector<Tensor>& v) {
                           auto y = upsample_nearest(v[0], factor);
                           return sum(mul(y, y));
                         };
                       }));

  out.push_back(run_op("elu", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         in = {random_tensor(rng, {2, 4, 4}, true, -2.0, 2.0)};
                         f = [](std::vector<Tensor>& v) {
                           auto y = elu(v[0]);
                           return sum(mul(y, y));
                         };
                       }));

  out.push_back(run_op("softplus", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         in = {random_tensor(rng, {2, 3, 3}, true, -3.0, 3.0)};
                         f = [](std::vector<Tensor>& v) {
                           auto y = softplus(v[0]);
                           return sum(mul(y, y));
                         };
                       }));

  out.push_back(run_op("linear", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         const int n = 2 + rng.uniform_int(5);
                         const int m = 1 + rng.uniform_int(5);
                         in = {random_tensor(rng, {n}),
                               random_tensor(rng, {m, n}),
                               random_tensor(rng, {m})};
                         f = [](std::vector<Tensor>& v) {
                           auto y = linear(v[0], v[1], v[2]);
                           return sum(mul(y, y));
                         };
                       }));

  out.push_back(run_op("softmax", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         const int n = 2 + rng.uniform_int(6);
                         in = {random_tensor(rng, {n}, true, -2.0, 2.0),
                               random_tensor(rng, {n})};
                         f = [](std::vector<Tensor>& v) {
                           return sum(mul(softmax(v[0]), v[1]));
                         };
                       }));

  out.push_back(run_op("global_avg_pool", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         const int c = 1 + rng.uniform_int(4);
                         in = {random_tensor(rng, {c, 5, 3})};
                         f = [](std::vector<Tensor>& v) {
                           auto y = global_avg_pool(v[0]);
                           return sum(mul(y, y));
                         };
                       }));

  out.push_back(run_op("masked_sq_norm", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         const int c = 1 + rng.uniform_int(3);
                         Tensor m = random_binary_mask(rng, 5, 4);
                         in = {random_tensor(rng, {c, 5, 4}),
                               random_tensor(rng, {c})};
                         f = [m](std::vector<Tensor>& v) {
                           return sum(mul(masked_sq_norm(v[0], m), v[1]));
                         };
                       }));

  out.push_back(run_op("masked_l1_mean", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         Tensor m = random_binary_mask(rng, 4, 4);
                         // Keep values away from the |.| kink at 0.
                         Tensor d = random_tensor(rng, {2, 4, 4});
                         for (D& v : d.data())
                           v += v >= 0 ? 0.5 : -0.5;
                         in = {d};
                         f = [m](std::vector<Tensor>& v) {
                           return masked_l1_mean(v[0], m);
                         };
                       }));

  out.push_back(run_op("bilinear_sample", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         const int c = 1 + rng.uniform_int(3);
                         const int ch = rng.uniform_int(c);
                         // Strictly fractional position: the interpolant has
                         // a kink at integer coordinates.
                         Tensor pos = Tensor::zeros({2}, true);
                         pos.data()[0] = rng.uniform_int(5) + rng.uniform(0.2, 0.8) - 1.0;
                         pos.data()[1] = rng.uniform_int(5) + rng.uniform(0.2, 0.8) - 1.0;
                         in = {random_tensor(rng, {c, 4, 5}), pos};
                         f = [ch](std::vector<Tensor>& v) {
                           auto y = bilinear_sample(v[0], v[1], ch);
                           return mul(y, y);
                         };
                       }));

  out.push_back(run_op("adaptive_conv", instances, seed,
                       [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
                         const int cin = 1 + rng.uniform_int(3);
                         const int cout = 1 + rng.uniform_int(3);
                         const int k = 3, h = 5, w = 6;
                         Tensor v = random_tensor(rng, {k * k, h, w}, true, 0.1, 1.0);
                         // Fractional offsets keep FD away from the
                         // bilinear kinks at integer positions.
                         Tensor d = Tensor::zeros({2 * k * k, h, w}, true);
                         for (D& x : d.data()) {
                           x = rng.uniform(-1.5, 1.5);
                           const double fr = x - std::floor(x);
                           if (fr < 0.2) x += 0.2;
                           if (fr > 0.8) x -= 0.2;
                         }
                         in = {random_tensor(rng, {cin, h, w}), v, d,
                               random_tensor(rng, {cout, cin, k, k})};
                         f = [](std::vector<Tensor>& t) {
                           auto y = adaptive_conv(t[0], t[1], t[2], t[3]);
                           return sum(mul(y, y));
                         };
                       }));

  out.push_back(run_op(
      "cross_distill_loss", instances, seed,
      [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
        const int c = 2 + rng.uniform_int(3);
        Tensor x_star = random_tensor(rng, {c, 4, 4}, false);
        Tensor m = random_binary_mask(rng, 4, 4);
        MetaNet<D> net = MetaNet<D>::make("gc.rho", c, rng.next_u64());
        in = {random_tensor(rng, {c, 4, 4}), net.w1, net.b1, net.w2, net.b2};
        f = [x_star, m, net](std::vector<Tensor>& v) {
          return cross_distill_loss(v[0], x_star, m, net(x_star));
        };
      }));

  out.push_back(run_op(
      "self_distill_loss", instances, seed,
      [](Rng& rng, Fn& f, std::vector<Tensor>& in) {
        const int c = 2, c2 = 3;
        Tensor deeper = random_tensor(rng, {c2, 2, 2}, false);
        Tensor m = random_binary_mask(rng, 2, 2);
        MetaNet<D> net = MetaNet<D>::make("gc.phi", c2, rng.next_u64());
        ConvLayer<D> fl = ConvLayer<D>::make("gc.align", c, c2, 3, 2, 1,
                                             rng.next_u64());
        in = {random_tensor(rng, {c, 4, 4}), net.w1, net.b1, net.w2, net.b2,
              fl.w, fl.b};
        f = [deeper, m, net, fl](std::vector<Tensor>& v) {
          return self_distill_loss(v[0], deeper, m, net(deeper), fl);
        };
      }));

  out.push_back(full_model_case(instances, seed, /*coords_per_param=*/8));
  return out;
}

}  // namespace dikd
