#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dikd/tensor.hpp"

namespace dikd {

struct GradCheckReport {
  // Per-input max relative error; rel = |a-n| / max(1, |a|, |n|).
  std::vector<double> max_rel_err;
  double worst = 0.0;
  bool ok(double tol) const { return worst < tol; }
};

// Central-difference check of a scalar-valued tensor function. `f` must be
// deterministic; inputs are perturbed in place one coordinate at a time.
// `coords_per_input` limits the sweep (0 = every coordinate).
template <typename T>
GradCheckReport gradcheck(
    const std::function<TensorT<T>(std::vector<TensorT<T>>&)>& f,
    std::vector<TensorT<T>>& inputs, T eps, int coords_per_input = 0,
    uint64_t seed = 1) {
  // Analytic pass.
  for (auto& in : inputs) in.zero_grad();
  TensorT<T> loss = f(inputs);
  loss.backward();
  std::vector<std::vector<T>> analytic;
  for (auto& in : inputs)
    analytic.push_back(in.has_grad() ? in.grad()
                                     : std::vector<T>(in.size(), T(0)));

  GradCheckReport rep;
  Rng rng(seed);
  for (size_t i = 0; i < inputs.size(); ++i) {
    auto& data = inputs[i].data();
    const int64_t n = int64_t(data.size());
    std::vector<int64_t> coords;
    if (coords_per_input <= 0 || coords_per_input >= n) {
      coords.resize(size_t(n));
      for (int64_t c = 0; c < n; ++c) coords[size_t(c)] = c;
    } else {
      for (int c = 0; c < coords_per_input; ++c)
        coords.push_back(rng.uniform_int(int(n)));
    }
    double worst = 0.0;
    for (int64_t c : coords) {
      const T orig = data[size_t(c)];
      data[size_t(c)] = orig + eps;
      const double fp = double(f(inputs).item());
      data[size_t(c)] = orig - eps;
      const double fm = double(f(inputs).item());
      data[size_t(c)] = orig;
      const double num = (fp - fm) / (2.0 * double(eps));
      const double ana = double(analytic[i][size_t(c)]);
      const double rel = std::abs(ana - num) /
                         std::max({1.0, std::abs(ana), std::abs(num)});
      worst = std::max(worst, rel);
    }
    rep.max_rel_err.push_back(worst);
    rep.worst = std::max(rep.worst, worst);
  }
  return rep;
}

}  // namespace dikd
