// Acceptance gate, fast half: numeric correctness properties that do not
// require long training runs. One summary line per criterion.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "dikd/checkpoint.hpp"
#include "dikd/data.hpp"
#include "dikd/gradcheck_suite.hpp"
#include "dikd/losses.hpp"
#include "dikd/metrics.hpp"
#include "dikd/trainer.hpp"

namespace fs = std::filesystem;
using dikd::Image;
using dikd::Rng;
using dikd::Shape;
using dikd::TensorT;
using Tensor = TensorT<float>;

namespace {

void verdict(const char* name, bool ok) {
  std::printf("[acceptance] %-28s %s\n", name, ok ? "PASS" : "FAIL");
  std::fflush(stdout);
}

template <typename T>
TensorT<T> random_tensor(Rng& rng, Shape shape, double lo = -1.0,
                         double hi = 1.0) {
  auto t = TensorT<T>::zeros(std::move(shape));
  for (T& v : t.data()) v = T(rng.uniform(lo, hi));
  return t;
}

}  // namespace

TEST_CASE("criterion 1: gradient suite") {
  const auto t0 = std::chrono::steady_clock::now();
  auto entries = dikd::run_gradcheck_suite(20, 7);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  bool ok = secs < 300.0;
  for (const auto& e : entries) {
    std::printf("  gradcheck %-22s instances=%d  max_rel_err=%.3e\n",
                e.op.c_str(), e.instances, e.max_rel_err);
    CHECK_MESSAGE(e.ok(1e-3), e.op);
    CHECK(e.instances >= 20);
    ok = ok && e.ok(1e-3) && e.instances >= 20;
  }
  std::printf("  gradient suite runtime: %.1fs (budget 300s)\n", secs);
  CHECK(secs < 300.0);
  CHECK(entries.size() >= 12);
  verdict("1 gradient suite", ok && entries.size() >= 12);
}

TEST_CASE("criterion 2: adaptive conv reduces to plain convolution") {
  Rng rng(101);
  bool ok = true;
  for (int inst = 0; inst < 20; ++inst) {
    const int cin = 1 + int(rng.uniform_int(3));
    const int cout = 1 + int(rng.uniform_int(4));
    const int k = rng.uniform() < 0.5 ? 3 : 5;
    const int h = k + 2 + int(rng.uniform_int(6));
    const int w = k + 2 + int(rng.uniform_int(6));
    auto x = random_tensor<float>(rng, {cin, h, w});
    auto wt = random_tensor<float>(rng, {cout, cin, k, k});
    auto v = Tensor::filled({k * k, h, w}, 1.0f);
    auto d = Tensor::zeros({2 * k * k, h, w});

    auto y = dikd::adaptive_conv(x, v, d, wt);

    // Direct-summation reference with zero padding.
    const int r = k / 2;
    for (int co = 0; co < cout && ok; ++co)
      for (int oy = 0; oy < h; ++oy)
        for (int ox = 0; ox < w; ++ox) {
          double acc = 0;
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy + ky - r, ix = ox + kx - r;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += double(wt.data()[((size_t(co) * cin + ci) * k + ky) * k + kx]) *
                       double(x.data()[(size_t(ci) * h + iy) * w + ix]);
              }
          const double got = double(y.data()[(size_t(co) * h + oy) * w + ox]);
          if (std::abs(got - acc) >= 1e-5) ok = false;
        }
    CHECK(ok);
  }
  verdict("2 conv reduction", ok);
}

TEST_CASE("criterion 3: filler residual contracts") {
  dikd::NetworkConfig cfg;
  cfg.levels = 3;
  cfg.base_channels = 16;
  cfg.input_size = 32;
  bool ok = true;

  // (a) All-known mask: gated encoder agrees bitwise with the plain one.
  auto gated = dikd::StudentNet<float>::make(cfg, 11);
  auto plain_cfg = cfg;
  plain_cfg.filler_enabled = false;
  auto plain = dikd::StudentNet<float>::make(plain_cfg, 11);

  Rng rng(103);
  auto input = random_tensor<float>(rng, {4, 32, 32}, 0.0, 1.0);
  std::vector<Tensor> zero_masks;
  for (int l = 1; l <= 3; ++l) {
    const int s = 32 >> l;
    zero_masks.push_back(Tensor::zeros({1, s, s}));
  }
  auto fg = gated.encode(input, zero_masks);
  auto fp = plain.encode(input, zero_masks);
  for (int l = 0; l < 3; ++l) {
    const bool same = fg[size_t(l)].data() == fp[size_t(l)].data();
    CHECK(same);
    ok = ok && same;
  }

  // (b) Per level with a real mask: outputs outside the level's holes equal
  // the plain path exactly.
  auto m = dikd::generate_irregular_mask(4, 32, 32, 0.2, 0.4);
  auto pyr = dikd::build_mask_pyramid(m, 3);
  std::vector<Tensor> masks;
  for (auto& lvl : pyr.levels) masks.push_back(lvl.to_tensor<float>());
  auto fg2 = gated.encode(input, masks);

  Tensor cur = input;
  for (int l = 0; l < 3; ++l) {
    auto d = dikd::elu(gated.feat[size_t(l)](cur));
    const auto& lvl = pyr.levels[size_t(l)];
    const int hw = lvl.h * lvl.w;
    for (int c = 0; c < fg2[size_t(l)].shape()[0]; ++c)
      for (int j = 0; j < hw; ++j)
        if (!lvl.grid[size_t(j)] &&
            fg2[size_t(l)].data()[size_t(c) * hw + j] !=
                d.data()[size_t(c) * hw + j])
          ok = false;
    cur = fg2[size_t(l)];
  }
  CHECK(ok);
  verdict("3 filler contracts", ok);
}

TEST_CASE("criterion 4: distillation loss contracts") {
  Rng rng(104);
  bool ok = true;

  // Zero difference and zero mask give exactly 0.
  auto x = random_tensor<float>(rng, {4, 8, 8});
  auto m = Tensor::zeros({1, 8, 8});
  for (float& v : m.data()) v = rng.uniform() < 0.5f ? 1.0f : 0.0f;
  auto rho = Tensor::filled({4}, 0.25f);
  ok = ok && dikd::cross_distill_loss(x, x, m, rho).item() == 0.0f;
  auto x2 = random_tensor<float>(rng, {4, 8, 8});
  ok = ok &&
       dikd::cross_distill_loss(x, x2, Tensor::zeros({1, 8, 8}), rho).item() ==
           0.0f;
  CHECK(ok);

  // C=1: the loss reduces to the mask-weighted squared error.
  for (int inst = 0; inst < 20; ++inst) {
    auto a = random_tensor<double>(rng, {1, 8, 8});
    auto b = random_tensor<double>(rng, {1, 8, 8});
    auto md = TensorT<double>::zeros({1, 8, 8});
    for (double& v : md.data()) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const double loss =
        dikd::cross_distill_loss(a, b, md, TensorT<double>::filled({1}, 1.0))
            .item();
    double expect = 0;
    for (int j = 0; j < 64; ++j) {
      const double d = a.data()[size_t(j)] - b.data()[size_t(j)];
      expect += md.data()[size_t(j)] * d * d;
    }
    if (std::abs(loss - expect) >= 1e-6) ok = false;
  }
  CHECK(ok);

  // Simplex invariant across a 500-iteration training run.
  const fs::path dir = "/tmp/dikd_acc_simplex";
  fs::remove_all(dir);
  fs::create_directories(dir);
  dikd::gen_data(1, 8, 16, 16, dir.string());
  auto data = dikd::load_dataset(dir.string());
  dikd::TrainConfig tc;
  tc.dataset_dir = dir.string();
  tc.image_size = 16;
  tc.levels = 2;
  tc.base_channels = 4;
  tc.batch_size = 2;
  tc.teacher_iterations = 50;
  tc.iterations = 500;
  tc.seed = 5;
  dikd::TeacherTrainer teacher(tc, data);
  teacher.run_all();
  dikd::StudentTrainer st(tc, teacher.params(), data);

  auto probe = random_tensor<float>(rng, {4, 16, 16}, 0.0, 1.0);
  auto mask = dikd::generate_irregular_mask(6, 16, 16, 0.2, 0.4);
  auto pyr = dikd::build_mask_pyramid(mask, 2);
  std::vector<Tensor> masks;
  for (auto& lvl : pyr.levels) masks.push_back(lvl.to_tensor<float>());

  double worst = 0;
  for (int it = 0; it < 500; ++it) {
    st.step();
    dikd::NoGradGuard ng;
    auto feats = st.net().encode(probe, masks);
    std::vector<Tensor> gates;
    for (int l = 0; l < 2; ++l) gates.push_back(st.net().rho[size_t(l)](feats[size_t(l)]));
    gates.push_back(st.net().phi[0](feats[1]));
    for (const auto& g : gates) {
      double s = 0;
      for (float v : g.data()) s += v;
      worst = std::max(worst, std::abs(s - 1.0));
    }
  }
  std::printf("  worst |sum(gate)-1| over 500 iterations: %.3e\n", worst);
  CHECK(worst < 1e-6);
  ok = ok && worst < 1e-6;
  fs::remove_all(dir);
  verdict("4 loss contracts", ok);
}

TEST_CASE("criterion 6: metric fidelity") {
  bool ok = true;
  Rng rng(106);
  for (int inst = 0; inst < 20; ++inst) {
    Image a = dikd::gen_image(200 + uint64_t(inst), 24, 24);
    Image b = dikd::gen_image(300 + uint64_t(inst), 24, 24);

    // PSNR oracle.
    double mse = 0;
    for (size_t i = 0; i < a.pix.size(); ++i) {
      const double d = double(a.pix[i]) - double(b.pix[i]);
      mse += d * d;
    }
    mse /= double(a.pix.size());
    const double psnr_ref = 10.0 * std::log10(1.0 / mse);
    if (std::abs(dikd::psnr(a, b) - psnr_ref) >= 1e-4) ok = false;

    // SSIM oracle: channel-mean grayscale, 8x8 windows, stride 1,
    // population statistics.
    auto gray = [](const Image& im, int y, int x) {
      return (double(im.at(0, y, x)) + double(im.at(1, y, x)) +
              double(im.at(2, y, x))) /
             3.0;
    };
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0;
    int windows = 0;
    for (int wy = 0; wy + 8 <= a.h; ++wy)
      for (int wx = 0; wx + 8 <= a.w; ++wx) {
        double ma = 0, mb = 0;
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) {
            ma += gray(a, wy + y, wx + x);
            mb += gray(b, wy + y, wx + x);
          }
        ma /= 64.0;
        mb /= 64.0;
        double va = 0, vb = 0, cov = 0;
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) {
            const double da = gray(a, wy + y, wx + x) - ma;
            const double db = gray(b, wy + y, wx + x) - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
          }
        va /= 64.0;
        vb /= 64.0;
        cov /= 64.0;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
    const double ssim_ref = total / windows;
    if (std::abs(dikd::ssim(a, b) - ssim_ref) >= 1e-4) ok = false;

    if (dikd::psnr(a, a) != 99.0) ok = false;
    if (std::abs(dikd::ssim(a, a) - 1.0) >= 1e-12) ok = false;
  }
  CHECK(ok);
  verdict("6 metric fidelity", ok);
}

TEST_CASE("criterion 8: format round trips") {
  const fs::path dir = "/tmp/dikd_acc_roundtrip";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Rng rng(108);
  bool ok = true;

  for (int i = 0; i < 100; ++i) {
    // Checkpoint with a random number of random-shaped tensors.
    dikd::Params<float> params;
    const int n = 1 + int(rng.uniform_int(5));
    for (int t = 0; t < n; ++t) {
      Shape shape;
      const int rank = 1 + int(rng.uniform_int(4));
      for (int r = 0; r < rank; ++r) shape.push_back(1 + int(rng.uniform_int(6)));
      auto tensor = random_tensor<float>(rng, shape, -100.0, 100.0);
      params.push_back({"t" + std::to_string(t), tensor});
    }
    const std::string cp = (dir / "f.ckpt").string();
    dikd::save_checkpoint(cp, params);
    auto loaded = dikd::load_checkpoint(cp);
    if (loaded.size() != params.size()) ok = false;
    for (size_t t = 0; t < params.size() && ok; ++t)
      if (loaded[t].first != params[t].first ||
          loaded[t].second.shape() != params[t].second.shape() ||
          loaded[t].second.data() != params[t].second.data())
        ok = false;

    // PPM with random size and already-quantized pixels.
    Image img;
    img.h = 4 + int(rng.uniform_int(29));
    img.w = 4 + int(rng.uniform_int(29));
    img.pix.resize(size_t(3) * img.h * img.w);
    for (float& v : img.pix)
      v = float(rng.uniform_int(256)) / 255.0f;
    const std::string pp = (dir / "f.ppm").string();
    dikd::write_ppm(pp, img);
    Image iback = dikd::read_ppm(pp);
    if (iback.h != img.h || iback.w != img.w || iback.pix != img.pix)
      ok = false;

    // PGM with a random binary grid.
    dikd::Mask m;
    m.h = 4 + int(rng.uniform_int(29));
    m.w = 4 + int(rng.uniform_int(29));
    m.grid.resize(size_t(m.h) * m.w);
    for (auto& v : m.grid) v = rng.uniform() < 0.5 ? 1 : 0;
    const std::string pg = (dir / "f.pgm").string();
    dikd::write_pgm_mask(pg, m);
    auto mback = dikd::read_pgm_mask(pg);
    if (mback.h != m.h || mback.w != m.w || mback.grid != m.grid) ok = false;
  }
  CHECK(ok);
  fs::remove_all(dir);
  verdict("8 format round trips", ok);
}
