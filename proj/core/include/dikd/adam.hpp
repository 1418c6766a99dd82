#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "dikd/networks.hpp"

namespace dikd {

// Adam with bias correction. beta1=0.9, beta2=0.999, eps=1e-8. Moment
// buffers are keyed by parameter name so optimizer state survives
// checkpoint/resume cycles in registration order.
template <typename T>
class Adam {
 public:
  void step(Params<T>& params, T lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(0.9, double(t_));
    const double bc2 = 1.0 - std::pow(0.999, double(t_));
    for (auto& [name, p] : params) {
      auto& [m, v] = state_[name];
      if (m.empty()) {
        m.assign(p.data().size(), T(0));
        v.assign(p.data().size(), T(0));
      }
      const bool has_g = p.has_grad();
      auto& data = p.data();
      for (size_t i = 0; i < data.size(); ++i) {
        const T g = has_g ? p.grad()[i] : T(0);
        if (!std::isfinite(double(g)))
          throw std::runtime_error("adam_step: non-finite gradient in parameter '" +
                                   name + "' at index " + std::to_string(i));
        m[i] = T(0.9) * m[i] + T(0.1) * g;
        v[i] = T(0.999) * v[i] + T(0.001) * g * g;
        const double mhat = double(m[i]) / bc1;
        const double vhat = double(v[i]) / bc2;
        data[i] -= T(double(lr) * mhat / (std::sqrt(vhat) + 1e-8));
      }
    }
  }

  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }

  using State =
      std::unordered_map<std::string, std::pair<std::vector<T>, std::vector<T>>>;
  State& state() { return state_; }
  const State& state() const { return state_; }

  static void zero_grad(Params<T>& params) {
    for (auto& [name, p] : params) p.zero_grad();
  }

 private:
  int64_t t_ = 0;
  State state_;
};

}  // namespace dikd
