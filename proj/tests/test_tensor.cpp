#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dikd/gradcheck.hpp"
#include "dikd/ops.hpp"
#include "dikd/tensor.hpp"

using dikd::Rng;
using dikd::Shape;
using dikd::TensorT;
using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

namespace {

template <typename T>
TensorT<T> random_tensor(Rng& rng, Shape shape, bool rg = false) {
  auto t = TensorT<T>::zeros(std::move(shape), rg);
  for (T& v : t.data()) v = T(rng.uniform(-1.0, 1.0));
  return t;
}

// Direct-summation convolution, quadruple loop, written independently of
// the library implementation.
std::vector<float> conv_oracle(const std::vector<float>& x, int cin, int h,
                               int w, const std::vector<float>& wt, int cout,
                               int k, const std::vector<float>& b, int stride,
                               int pad) {
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;
  std::vector<float> y(size_t(cout) * ho * wo, 0.0f);
  for (int co = 0; co < cout; ++co)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = b[size_t(co)];
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * stride - pad + ky;
              const int ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += double(wt[((size_t(co) * cin + ci) * k + ky) * k + kx]) *
                     double(x[(size_t(ci) * h + iy) * w + ix]);
            }
        y[(size_t(co) * ho + oy) * wo + ox] = float(acc);
      }
  return y;
}

}  // namespace

TEST_CASE("conv2d identity kernel reproduces the input exactly") {
  Rng rng(42);
  auto x = random_tensor<float>(rng, {1, 5, 5});
  auto w = Tensor::zeros({1, 1, 3, 3});
  w.data()[4] = 1.0f;  // center tap
  auto b = Tensor::zeros({1});
  auto y = dikd::conv2d(x, w, b, 1, 1);
  REQUIRE(y.shape() == Shape{1, 5, 5});
  for (size_t i = 0; i < x.data().size(); ++i)
    CHECK(y.data()[i] == x.data()[i]);  // bitwise
}

TEST_CASE("conv2d scalar case") {
  auto x = Tensor::from({1, 1, 1}, {2.0f});
  auto w = Tensor::from({1, 1, 1, 1}, {3.0f});
  auto b = Tensor::from({1}, {0.5f});
  auto y = dikd::conv2d(x, w, b, 1, 0);
  CHECK(y.item() == doctest::Approx(6.5f));
}

TEST_CASE("conv2d matches the quadruple-loop oracle") {
  Rng rng(7);
  for (int inst = 0; inst < 5; ++inst) {
    auto x = random_tensor<float>(rng, {2, 8, 8});
    auto w = random_tensor<float>(rng, {4, 2, 3, 3});
    auto b = random_tensor<float>(rng, {4});
    for (int stride : {1, 2}) {
      auto y = dikd::conv2d(x, w, b, stride, 1);
      auto expect = conv_oracle(x.data(), 2, 8, 8, w.data(), 4, 3, b.data(),
                                stride, 1);
      REQUIRE(y.data().size() == expect.size());
      for (size_t i = 0; i < expect.size(); ++i)
        CHECK(y.data()[i] == doctest::Approx(expect[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("conv2d rejects channel mismatch with both shapes in the message") {
  auto x = Tensor::zeros({2, 4, 4});
  auto w = Tensor::zeros({1, 3, 3, 3});
  auto b = Tensor::zeros({1});
  try {
    dikd::conv2d(x, w, b, 1, 1);
    FAIL("expected ShapeError");
  } catch (const dikd::ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x4x4") != std::string::npos);
    CHECK(msg.find("1x3x3x3") != std::string::npos);
  }
}

TEST_CASE("upsample_nearest block-replicates and factor 1 is identity") {
  auto x = Tensor::from({1, 2, 2}, {1, 2, 3, 4});
  auto y = dikd::upsample_nearest(x, 2);
  const std::vector<float> expect = {1, 1, 2, 2, 1, 1, 2, 2,
                                     3, 3, 4, 4, 3, 3, 4, 4};
  CHECK(y.data() == expect);
  auto y1 = dikd::upsample_nearest(x, 1);
  CHECK(y1.data() == x.data());
  CHECK_THROWS_AS(dikd::upsample_nearest(x, 0), std::invalid_argument);
}

TEST_CASE("upsample_nearest gradient sums block contributions") {
  auto x = Tensor::zeros({1, 2, 2}, true);
  auto loss = dikd::sum(dikd::upsample_nearest(x, 3));
  loss.backward();
  for (float g : x.grad()) CHECK(g == doctest::Approx(9.0f));
}

TEST_CASE("softmax of zeros is uniform and output is simplex") {
  auto y = dikd::softmax(Tensor::from({3}, {0, 0, 0}));
  for (float v : y.data()) CHECK(v == doctest::Approx(1.0f / 3.0f));

  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    auto x = Tensor::zeros({8});
    for (float& v : x.data()) v = float(rng.uniform(-30.0, 30.0));
    auto s = dikd::softmax(x);
    double total = 0;
    for (float v : s.data()) {
      CHECK(v >= 0.0f);
      total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("global_avg_pool of a constant tensor is constant") {
  auto x = Tensor::filled({3, 4, 4}, 2.5f);
  auto y = dikd::global_avg_pool(x);
  REQUIRE(y.shape() == Shape{3});
  for (float v : y.data()) CHECK(v == doctest::Approx(2.5f));
}

TEST_CASE("elu gradient matches central finite differences at -1 and +1") {
  for (double x0 : {-1.0, 1.0}) {
    auto x = DTensor::from({1}, {x0}, true);
    auto loss = dikd::sum(dikd::elu(x));
    loss.backward();
    const double eps = 1e-4;
    auto f = [](double v) { return v > 0 ? v : std::expm1(v); };
    const double fd = (f(x0 + eps) - f(x0 - eps)) / (2 * eps);
    CHECK(std::abs(x.grad()[0] - fd) < 1e-4);
  }
}

TEST_CASE("masked_sq_norm examples and loop oracle") {
  auto m0 = Tensor::zeros({1, 3, 3});
  auto d = Tensor::filled({2, 3, 3}, 1.0f);
  auto y0 = dikd::masked_sq_norm(d, m0);
  for (float v : y0.data()) CHECK(v == 0.0f);

  auto m = Tensor::zeros({1, 3, 3});
  for (int i = 0; i < 7; ++i) m.data()[size_t(i)] = 1.0f;
  auto y = dikd::masked_sq_norm(d, m);
  for (float v : y.data()) CHECK(v == doctest::Approx(7.0f));

  Rng rng(11);
  auto dr = random_tensor<float>(rng, {3, 4, 5});
  auto mr = Tensor::zeros({1, 4, 5});
  for (float& v : mr.data()) v = rng.uniform() < 0.5f ? 1.0f : 0.0f;
  auto yr = dikd::masked_sq_norm(dr, mr);
  for (int c = 0; c < 3; ++c) {
    double acc = 0;
    for (int j = 0; j < 20; ++j)
      acc += double(mr.data()[size_t(j)]) * double(dr.data()[size_t(c) * 20 + j]) *
             double(dr.data()[size_t(c) * 20 + j]);
    CHECK(yr.data()[size_t(c)] == doctest::Approx(acc).epsilon(1e-5));
  }

  CHECK_THROWS_AS(dikd::masked_sq_norm(d, Tensor::zeros({1, 2, 2})),
                  dikd::ShapeError);
}

TEST_CASE("backward of sum gives all-ones gradient") {
  auto x = Tensor::zeros({2, 3, 4}, true);
  dikd::sum(x).backward();
  for (float g : x.grad()) CHECK(g == 1.0f);
}

TEST_CASE("backward of sum of squares is 2x") {
  auto x = Tensor::from({3}, {1, 2, 3}, true);
  dikd::sum(dikd::mul(x, x)).backward();
  CHECK(x.grad() == std::vector<float>{2, 4, 6});
}

TEST_CASE("backward errors: non-scalar, no graph, repeated call") {
  auto x = Tensor::zeros({3}, true);
  auto y = dikd::mul(x, x);
  CHECK_THROWS_AS(y.backward(), std::invalid_argument);

  auto leaf = Tensor::zeros({1}, true);
  CHECK_THROWS_AS(leaf.backward(), std::runtime_error);

  auto loss = dikd::sum(y);
  loss.backward();
  CHECK_THROWS_AS(loss.backward(), std::runtime_error);
}

TEST_CASE("a tensor with requires_grad=false never accumulates gradient") {
  auto x = Tensor::from({2}, {1, 2}, false);
  auto y = Tensor::from({2}, {3, 4}, true);
  dikd::sum(dikd::mul(x, y)).backward();
  CHECK_FALSE(x.has_grad());
  CHECK(y.has_grad());
}

TEST_CASE("gradient accumulation is additive for shared tensors") {
  auto x = Tensor::from({2}, {1.0f, 2.0f}, true);
  auto loss = dikd::add(dikd::sum(x), dikd::sum(dikd::mul(x, x)));
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(1 + 2));
  CHECK(x.grad()[1] == doctest::Approx(1 + 4));
}

TEST_CASE("backward is linear: grad(a*L1 + b*L2) = a*grad(L1) + b*grad(L2)") {
  Rng rng(13);
  auto x = random_tensor<float>(rng, {2, 3, 3}, true);

  auto run = [&x](float a, float b) {
    x.zero_grad();
    auto l1 = dikd::sum(dikd::mul(x, x));
    auto l2 = dikd::mean(x);
    dikd::add(dikd::scalar_mul(l1, a), dikd::scalar_mul(l2, b)).backward();
    return x.grad();
  };
  auto g1 = run(1.0f, 0.0f);
  auto g2 = run(0.0f, 1.0f);
  auto gc = run(2.0f, 3.0f);
  for (size_t i = 0; i < gc.size(); ++i)
    CHECK(gc[i] == doctest::Approx(2.0f * g1[i] + 3.0f * g2[i]).epsilon(1e-5));
}

TEST_CASE("gradcheck: elementwise and reduction ops in double precision") {
  Rng rng(17);
  using Fn = std::function<DTensor(std::vector<DTensor>&)>;

  auto check = [&](Fn f, std::vector<DTensor> inputs) {
    auto rep = dikd::gradcheck<double>(f, inputs, 1e-3);
    CHECK(rep.worst < 1e-3);
  };

  check([](std::vector<DTensor>& v) { return dikd::sum(dikd::mul(v[0], v[1])); },
        {random_tensor<double>(rng, {2, 3, 3}, true),
         random_tensor<double>(rng, {2, 3, 3}, true)});
  check([](std::vector<DTensor>& v) {
          auto y = dikd::sub(dikd::elu(v[0]), v[1]);
          return dikd::sum(dikd::mul(y, y));
        },
        {random_tensor<double>(rng, {2, 3, 3}, true),
         random_tensor<double>(rng, {2, 3, 3}, true)});
  check([](std::vector<DTensor>& v) { return dikd::mean(dikd::softplus(v[0])); },
        {random_tensor<double>(rng, {3, 2, 2}, true)});
}

TEST_CASE("bilinear_sample examples") {
  // Ramp image: x[0,i,j] = j.
  auto x = Tensor::zeros({1, 3, 4});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) x.data()[size_t(i) * 4 + j] = float(j);

  auto v = dikd::bilinear_sample(x, Tensor::from({2}, {0.0f, 1.5f}), 0);
  CHECK(v.item() == doctest::Approx(1.5f));

  auto exact = dikd::bilinear_sample(x, Tensor::from({2}, {2.0f, 3.0f}), 0);
  CHECK(exact.item() == doctest::Approx(3.0f));

  auto outside = dikd::bilinear_sample(x, Tensor::from({2}, {-5.0f, -5.0f}), 0);
  CHECK(outside.item() == 0.0f);
}
