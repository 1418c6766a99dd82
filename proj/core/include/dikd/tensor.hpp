#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "dikd/util.hpp"

namespace dikd {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ")";
  return os.str();
}

template <typename T>
struct TensorImpl;

// One recorded operation of the define-by-run graph. `seq` is the global
// execution index; backward() replays nodes in exact reverse `seq` order.
template <typename T>
struct GraphNode {
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  // Receives the output gradient buffer and accumulates into input grads.
  std::function<void(const std::vector<T>&)> backfn;
  // Non-owning: a node's sole owner is its output impl, so the output is
  // alive whenever the node is reachable.
  TensorImpl<T>* output = nullptr;
  int64_t seq = 0;
  bool consumed = false;
};

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<GraphNode<T>> node;

  bool needs_grad() const { return requires_grad || node != nullptr; }

  std::vector<T>& grad_buf() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

namespace detail {
inline int64_t& seq_counter() {
  static int64_t c = 0;
  return c;
}
inline bool& grad_mode() {
  static bool on = true;
  return on;
}
}  // namespace detail

// Disables graph recording within a scope (teacher forward, evaluation).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = prev; }
};

inline bool grad_enabled() { return detail::grad_mode(); }

// Dense row-major tensor of T participating in a reverse-mode graph.
// Value-semantic handle; the payload is shared.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  static TensorT zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), T(0), requires_grad);
  }

  static TensorT filled(Shape shape, T value, bool requires_grad = false) {
    check_shape(shape);
    auto p = std::make_shared<TensorImpl<T>>();
    p->data.assign(size_t(numel(shape)), value);
    p->shape = std::move(shape);
    p->requires_grad = requires_grad;
    return TensorT(std::move(p));
  }

  static TensorT from(Shape shape, std::vector<T> data,
                      bool requires_grad = false) {
    check_shape(shape);
    if (int64_t(data.size()) != numel(shape))
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    auto p = std::make_shared<TensorImpl<T>>();
    p->shape = std::move(shape);
    p->data = std::move(data);
    p->requires_grad = requires_grad;
    return TensorT(std::move(p));
  }

  static TensorT scalar(T value, bool requires_grad = false) {
    return from({1}, {value}, requires_grad);
  }

  bool defined() const { return p_ != nullptr; }
  const Shape& shape() const { return p_->shape; }
  int64_t size() const { return int64_t(p_->data.size()); }
  bool requires_grad() const { return p_->requires_grad; }

  std::vector<T>& data() { return p_->data; }
  const std::vector<T>& data() const { return p_->data; }
  T item() const { return p_->data.at(0); }

  bool has_grad() const { return !p_->grad.empty(); }
  std::vector<T>& grad() { return p_->grad_buf(); }
  const std::vector<T>& grad() const { return p_->grad; }
  void zero_grad() { p_->grad.clear(); }

  // Same storage, cut out of the graph; never accumulates gradient.
  TensorT detach() const {
    auto p = std::make_shared<TensorImpl<T>>();
    p->shape = p_->shape;
    p->data = p_->data;
    p->requires_grad = false;
    return TensorT(std::move(p));
  }

  std::shared_ptr<TensorImpl<T>> impl() const { return p_; }

  // Records `node` as the producer of this tensor (op implementation hook).
  static TensorT make_result(Shape shape, std::vector<T> data,
                             std::vector<TensorT> inputs,
                             std::function<void(const std::vector<T>&)> backfn) {
    TensorT out = from(std::move(shape), std::move(data));
    if (!grad_enabled()) return out;
    bool any = false;
    for (const auto& in : inputs)
      if (in.p_->needs_grad()) any = true;
    if (!any) return out;
    auto node = std::make_shared<GraphNode<T>>();
    node->seq = ++detail::seq_counter();
    node->backfn = std::move(backfn);
    node->output = out.p_.get();
    for (auto& in : inputs) node->inputs.push_back(in.p_);
    out.p_->node = std::move(node);
    return out;
  }

  // Reverse-mode sweep from a scalar loss. Visits recorded nodes in exact
  // reverse execution order; accumulation into shared inputs is additive.
  void backward() const {
    if (!p_) throw std::invalid_argument("backward: undefined tensor");
    if (size() != 1)
      throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                  shape_str(p_->shape));
    if (!p_->node)
      throw std::runtime_error("backward: tensor has no recorded graph");
    if (p_->node->consumed)
      throw std::runtime_error(
          "backward: graph already consumed; rebuild the forward pass first");

    // Collect reachable nodes.
    std::vector<GraphNode<T>*> nodes;
    std::unordered_set<GraphNode<T>*> seen;
    std::vector<GraphNode<T>*> stack{p_->node.get()};
    seen.insert(p_->node.get());
    while (!stack.empty()) {
      GraphNode<T>* n = stack.back();
      stack.pop_back();
      nodes.push_back(n);
      for (auto& in : n->inputs) {
        if (in->node && !seen.count(in->node.get())) {
          seen.insert(in->node.get());
          stack.push_back(in->node.get());
        }
      }
    }
    std::sort(nodes.begin(), nodes.end(),
              [](auto* a, auto* b) { return a->seq > b->seq; });

    p_->grad_buf()[0] = T(1);
    for (GraphNode<T>* n : nodes) {
      n->backfn(n->output->grad_buf());
      n->consumed = true;
    }
  }

 private:
  explicit TensorT(std::shared_ptr<TensorImpl<T>> p) : p_(std::move(p)) {}

  static void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must be non-empty");
    for (int d : shape)
      if (d <= 0)
        throw ShapeError("tensor extents must be positive, got " +
                         shape_str(shape));
  }

  std::shared_ptr<TensorImpl<T>> p_;

  template <typename U>
  friend class TensorT;
};

}  // namespace dikd
