#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <set>

#include "dikd/mask.hpp"

using dikd::Mask;
using dikd::Rng;

namespace {

Mask make_mask(int h, int w, std::initializer_list<int> hole_indices) {
  Mask m;
  m.h = h;
  m.w = w;
  m.grid.assign(size_t(h) * w, 0);
  for (int i : hole_indices) m.grid[size_t(i)] = 1;
  return m;
}

}  // namespace

TEST_CASE("generated masks land in the requested area bucket") {
  for (uint64_t seed : {1ull, 2ull, 77ull}) {
    for (auto [lo, hi] : std::vector<std::pair<double, double>>{
             {0.10, 0.20}, {0.30, 0.40}, {0.0, 0.6}}) {
      auto m = dikd::generate_irregular_mask(seed, 64, 64, lo, hi);
      const double r = dikd::mask_ratio(m);
      CHECK(r >= lo);
      CHECK(r <= hi);
      for (uint8_t v : m.grid) CHECK((v == 0 || v == 1));
    }
  }
}

TEST_CASE("mask generation is deterministic and varies with the seed") {
  auto a = dikd::generate_irregular_mask(5, 32, 32, 0.1, 0.3);
  auto b = dikd::generate_irregular_mask(5, 32, 32, 0.1, 0.3);
  auto c = dikd::generate_irregular_mask(6, 32, 32, 0.1, 0.3);
  CHECK(a.grid == b.grid);
  CHECK(a.grid != c.grid);
}

TEST_CASE("mask generation rejects bad arguments") {
  CHECK_THROWS_AS(dikd::generate_irregular_mask(1, 8, 32, 0.1, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(dikd::generate_irregular_mask(1, 32, 32, 0.3, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(dikd::generate_irregular_mask(1, 32, 32, 0.1, 0.7),
                  std::invalid_argument);
  CHECK_THROWS_AS(dikd::generate_irregular_mask(1, 32, 32, -0.1, 0.2),
                  std::invalid_argument);
}

TEST_CASE("pyramid max-pool: a coarse pixel is a hole iff any child is") {
  // 4x4 with a single hole at (1,2). Level 0 (2x2): only cell (0,1) set.
  auto m = make_mask(4, 4, {6});
  auto pyr = dikd::build_mask_pyramid(m, 2);
  REQUIRE(pyr.levels.size() == 2);
  CHECK(pyr.levels[0].grid == std::vector<uint8_t>{0, 1, 0, 0});
  CHECK(pyr.levels[1].grid == std::vector<uint8_t>{1});

  // All-known input stays all-known at every level.
  auto z = make_mask(8, 8, {});
  auto pz = dikd::build_mask_pyramid(z, 3);
  for (const auto& lvl : pz.levels)
    for (uint8_t v : lvl.grid) CHECK(v == 0);
}

TEST_CASE("pyramid hole ratio never decreases with depth") {
  for (uint64_t seed : {3ull, 14ull, 159ull}) {
    auto m = dikd::generate_irregular_mask(seed, 64, 64, 0.2, 0.4);
    auto pyr = dikd::build_mask_pyramid(m, 3);
    double prev = dikd::mask_ratio(m);
    for (const auto& lvl : pyr.levels) {
      const double r = dikd::mask_ratio(lvl);
      CHECK(r >= prev - 1e-12);
      prev = r;
    }
  }
}

TEST_CASE("pyramid requires divisibility by 2^levels") {
  auto m = make_mask(6, 6, {});
  CHECK_NOTHROW(dikd::build_mask_pyramid(m, 1));
  CHECK_THROWS_AS(dikd::build_mask_pyramid(m, 2), std::invalid_argument);
}

TEST_CASE("apply_mask keeps known pixels and fills holes") {
  auto img = dikd::TensorT<float>::zeros({3, 2, 2});
  for (size_t i = 0; i < 12; ++i) img.data()[i] = float(i) / 12.0f;
  auto m = make_mask(2, 2, {1, 2});
  auto out = dikd::apply_mask(img, m, 0.5f);
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < 4; ++j) {
      const float got = out.data()[size_t(c) * 4 + j];
      if (j == 1 || j == 2)
        CHECK(got == 0.5f);
      else
        CHECK(got == img.data()[size_t(c) * 4 + j]);
    }
}

TEST_CASE("PGM round trip is bit-exact") {
  const std::string path = "/tmp/dikd_mask_test.pgm";
  for (uint64_t seed : {11ull, 12ull}) {
    auto m = dikd::generate_irregular_mask(seed, 48, 40, 0.1, 0.5);
    dikd::write_pgm_mask(path, m);
    auto back = dikd::read_pgm_mask(path);
    CHECK(back.h == m.h);
    CHECK(back.w == m.w);
    CHECK(back.grid == m.grid);
  }
  std::remove(path.c_str());
}

TEST_CASE("read_pgm_mask thresholds at 128 and validates the header") {
  const std::string path = "/tmp/dikd_mask_gray.pgm";
  {
    FILE* f = fopen(path.c_str(), "wb");
    fprintf(f, "P5\n2 2\n255\n");
    const uint8_t px[4] = {0, 127, 128, 255};
    fwrite(px, 1, 4, f);
    fclose(f);
  }
  auto m = dikd::read_pgm_mask(path);
  CHECK(m.grid == std::vector<uint8_t>{0, 0, 1, 1});
  std::remove(path.c_str());

  const std::string bad = "/tmp/dikd_mask_bad.pgm";
  {
    FILE* f = fopen(bad.c_str(), "wb");
    fprintf(f, "P2\n2 2\n255\n0 0 0 0\n");
    fclose(f);
  }
  CHECK_THROWS_AS(dikd::read_pgm_mask(bad), std::runtime_error);
  std::remove(bad.c_str());
  CHECK_THROWS_AS(dikd::read_pgm_mask("/tmp/does_not_exist.pgm"),
                  std::runtime_error);
}

TEST_CASE("holes form brush strokes, not salt-and-pepper noise") {
  // Every hole pixel should have at least one hole neighbor for strokes of
  // width >= 2 pixels.
  auto m = dikd::generate_irregular_mask(99, 64, 64, 0.2, 0.4);
  int isolated = 0;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      if (!m.at(y, x)) continue;
      bool neighbor = false;
      for (int dy = -1; dy <= 1 && !neighbor; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int ny = y + dy, nx = x + dx;
          if (ny >= 0 && ny < m.h && nx >= 0 && nx < m.w && m.at(ny, nx)) {
            neighbor = true;
            break;
          }
        }
      if (!neighbor) ++isolated;
    }
  CHECK(isolated == 0);
}

TEST_CASE("mask_ratio counts holes") {
  auto m = make_mask(8, 8, {});
  CHECK(dikd::mask_ratio(m) == 0.0);
  for (int i = 0; i < 16; ++i) m.grid[size_t(i)] = 1;
  CHECK(dikd::mask_ratio(m) == 0.25);
  for (auto& v : m.grid) v = 1;
  CHECK(dikd::mask_ratio(m) == 1.0);
}
