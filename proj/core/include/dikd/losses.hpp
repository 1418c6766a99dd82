#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dikd/networks.hpp"
#include "dikd/ops.hpp"

namespace dikd {

struct LossWeights {
  // The trainer composes the distillation terms normalized per hole pixel,
  // so cross/self weights are on the same footing as the (mean-based)
  // reconstruction terms.
  double rec_hole = 6.0;
  double rec_valid = 1.0;
  double cross = 0.1;
  double self = 0.1;

  void validate() const {
    if (rec_hole < 0 || rec_valid < 0 || cross < 0 || self < 0)
      throw std::invalid_argument("LossWeights: weights must be non-negative");
    if (rec_hole == 0 && rec_valid == 0 && cross == 0 && self == 0)
      throw std::invalid_argument("LossWeights: at least one weight must be > 0");
  }
};

// Unweighted per-term values for logging. CSV row layout:
// iter, rec_hole, rec_valid, cross_1..cross_L, self_1..self_{L-1}, total.
struct LossReport {
  double rec_hole = 0, rec_valid = 0, total = 0;
  std::vector<double> cross, self;

  static std::string csv_header(int levels) {
    std::string s = "iter,rec_hole,rec_valid";
    for (int l = 1; l <= levels; ++l) s += ",cross_" + std::to_string(l);
    for (int l = 1; l < levels; ++l) s += ",self_" + std::to_string(l);
    return s + ",total";
  }
  std::string csv_row(int64_t iter) const {
    std::string s = std::to_string(iter) + "," + std::to_string(rec_hole) +
                    "," + std::to_string(rec_valid);
    for (double v : cross) s += "," + std::to_string(v);
    for (double v : self) s += "," + std::to_string(v);
    return s + "," + std::to_string(total);
  }
};

namespace detail {

template <typename T>
void check_simplex(const TensorT<T>& w, const char* op) {
  T s = T(0);
  for (T v : w.data()) {
    if (v < T(-1e-6))
      throw std::invalid_argument(std::string(op) +
                                  ": channel weights must be non-negative");
    s += v;
  }
  if (std::abs(double(s) - 1.0) > 1e-5)
    throw std::invalid_argument(std::string(op) +
                                ": channel weights must sum to 1, got " +
                                std::to_string(double(s)));
}

}  // namespace detail

// Cross distillation at one level: sum_c rho[c] * ||(x_l - x_l*)_c . M||^2.
// The teacher feature must be graph-free (frozen teacher); gradient reaches
// x_l and, through rho, the meta-network.
template <typename T>
TensorT<T> cross_distill_loss(const TensorT<T>& x_l,
                              const TensorT<T>& x_l_star,
                              const TensorT<T>& mask_l,
                              const TensorT<T>& rho) {
  detail::check_same_shape(x_l, x_l_star, "cross_distill_loss");
  if (rho.shape() != Shape{x_l.shape()[0]})
    throw ShapeError("cross_distill_loss: rho " + shape_str(rho.shape()) +
                     " does not match " + std::to_string(x_l.shape()[0]) +
                     " channels");
  detail::check_simplex(rho, "cross_distill_loss");
  return sum(mul(rho, masked_sq_norm(sub(x_l, x_l_star), mask_l)));
}

// Self distillation at one level: sum_c phi[c] * ||(f_l(x_l) - x_{l+1})_c . M||^2.
// The deeper feature x_{l+1} should be passed detached; only the shallow
// side, f_l and the meta-network receive gradient.
template <typename T>
TensorT<T> self_distill_loss(const TensorT<T>& x_l,
                             const TensorT<T>& x_lplus1,
                             const TensorT<T>& mask_lplus1,
                             const TensorT<T>& phi,
                             const ConvLayer<T>& f_l) {
  TensorT<T> aligned = f_l(x_l);
  detail::check_same_shape(aligned, x_lplus1, "self_distill_loss");
  if (phi.shape() != Shape{x_lplus1.shape()[0]})
    throw ShapeError("self_distill_loss: phi " + shape_str(phi.shape()) +
                     " does not match " + std::to_string(x_lplus1.shape()[0]) +
                     " channels");
  detail::check_simplex(phi, "self_distill_loss");
  return sum(mul(phi, masked_sq_norm(sub(aligned, x_lplus1), mask_lplus1)));
}

// L1 means over hole and known pixels. An empty region contributes 0.
template <typename T>
std::pair<TensorT<T>, TensorT<T>> reconstruction_loss(
    const TensorT<T>& pred, const TensorT<T>& gt, const TensorT<T>& mask) {
  detail::check_same_shape(pred, gt, "reconstruction_loss");
  TensorT<T> diff = sub(pred, gt);
  std::vector<T> inv(mask.data().size());
  for (size_t i = 0; i < inv.size(); ++i) inv[i] = T(1) - mask.data()[i];
  TensorT<T> valid_mask = TensorT<T>::from(mask.shape(), std::move(inv));
  return {masked_l1_mean(diff, mask), masked_l1_mean(diff, valid_mask)};
}

// Loss terms of one training step before weighting. Undefined tensors (and
// empty vectors) simply do not contribute.
template <typename T>
struct LossParts {
  TensorT<T> rec_hole, rec_valid;
  std::vector<TensorT<T>> cross;  // per level, 1..L
  std::vector<TensorT<T>> self;   // per level, 1..L-1
};

// Weighted total; level sums are uniform. Returns the scalar graph tensor
// and the unweighted per-term report.
template <typename T>
std::pair<TensorT<T>, LossReport> total_loss(const LossParts<T>& parts,
                                             const LossWeights& w) {
  w.validate();
  LossReport rep;
  TensorT<T> total = TensorT<T>::scalar(T(0));
  auto acc = [&total](const TensorT<T>& term, double weight) {
    if (weight != 0.0) total = add(total, scalar_mul(term, T(weight)));
  };
  if (parts.rec_hole.defined()) {
    rep.rec_hole = double(parts.rec_hole.item());
    acc(parts.rec_hole, w.rec_hole);
  }
  if (parts.rec_valid.defined()) {
    rep.rec_valid = double(parts.rec_valid.item());
    acc(parts.rec_valid, w.rec_valid);
  }
  for (const auto& t : parts.cross) {
    rep.cross.push_back(double(t.item()));
    acc(t, w.cross);
  }
  for (const auto& t : parts.self) {
    rep.self.push_back(double(t.item()));
    acc(t, w.self);
  }
  rep.total = double(total.item());
  return {std::move(total), std::move(rep)};
}

}  // namespace dikd
