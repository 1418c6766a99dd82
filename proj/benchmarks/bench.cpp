#include <benchmark/benchmark.h>

#include <filesystem>

#include "dikd/adaptive_conv.hpp"
#include "dikd/data.hpp"
#include "dikd/mask.hpp"
#include "dikd/ops.hpp"
#include "dikd/trainer.hpp"

using dikd::Rng;
using dikd::TensorT;
using Tensor = TensorT<float>;

namespace {

Tensor random_tensor(Rng& rng, dikd::Shape shape) {
  auto t = Tensor::zeros(std::move(shape));
  for (float& v : t.data()) v = float(rng.uniform(-1.0, 1.0));
  return t;
}

void bm_conv2d(benchmark::State& state) {
  const int c = int(state.range(0)), s = int(state.range(1));
  Rng rng(1);
  auto x = random_tensor(rng, {c, s, s});
  auto w = random_tensor(rng, {c, c, 3, 3});
  auto b = random_tensor(rng, {c});
  for (auto _ : state) {
    dikd::NoGradGuard ng;
    benchmark::DoNotOptimize(dikd::conv2d(x, w, b, 1, 1));
  }
}
BENCHMARK(bm_conv2d)->Args({16, 16})->Args({32, 8})->Args({64, 4});

void bm_adaptive_conv(benchmark::State& state) {
  const int c = int(state.range(0)), s = int(state.range(1));
  Rng rng(2);
  auto x = random_tensor(rng, {c, s, s});
  auto v = random_tensor(rng, {9, s, s});
  for (float& val : v.data()) val = std::abs(val) + 0.1f;
  auto d = random_tensor(rng, {18, s, s});
  auto w = random_tensor(rng, {c, c, 3, 3});
  for (auto _ : state) {
    dikd::NoGradGuard ng;
    benchmark::DoNotOptimize(dikd::adaptive_conv(x, v, d, w));
  }
}
BENCHMARK(bm_adaptive_conv)->Args({16, 16})->Args({32, 8});

void bm_mask_generation(benchmark::State& state) {
  uint64_t seed = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        dikd::generate_irregular_mask(seed++, 32, 32, 0.2, 0.4));
}
BENCHMARK(bm_mask_generation);

void bm_student_step(benchmark::State& state) {
  const std::string dir = "/tmp/dikd_bench_data";
  std::filesystem::create_directories(dir);
  dikd::gen_data(1, 16, 32, 32, dir);
  auto data = dikd::load_dataset(dir);
  dikd::TrainConfig cfg;
  cfg.dataset_dir = dir;
  cfg.teacher_iterations = 20;
  dikd::TeacherTrainer teacher(cfg, data);
  teacher.run_all();
  dikd::StudentTrainer st(cfg, teacher.params(), data);
  for (auto _ : state) st.step();
  std::filesystem::remove_all(dir);
}
BENCHMARK(bm_student_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
