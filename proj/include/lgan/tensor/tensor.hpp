#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "lgan/core/rng.hpp"

namespace lgan {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {

// Set while a gradient check is running; elementwise ops with kinks record
// whether any input sits exactly on the non-differentiable point.
struct KinkWatch {
  bool enabled = false;
  bool hit = false;
};

inline KinkWatch& kink_watch() {
  thread_local KinkWatch w;
  return w;
}

}  // namespace detail

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> val;
  std::vector<T> grad;
  bool requires_grad = false;  // leaf parameter flag
  bool needs_grad = false;     // true if this node or any ancestor requires grad
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), T(0));
  }
};

// Value-semantics handle over a shared autograd node. Ops build the tape
// eagerly; backward() walks it in reverse topological order.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

  static Tensor leaf(Shape shape, std::vector<T> data, bool requires_grad = false) {
    const int64_t n = shape_numel(shape);
    if (static_cast<int64_t>(data.size()) != n) {
      throw std::invalid_argument("tensor: data size " + std::to_string(data.size()) +
                                  " does not match shape " + shape_str(shape));
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->val = std::move(data);
    node->requires_grad = requires_grad;
    node->needs_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> v(static_cast<size_t>(shape_numel(shape)), T(0));
    return leaf(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    std::vector<T> v(static_cast<size_t>(shape_numel(shape)), value);
    return leaf(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor scalar(T value) { return leaf({1}, {value}); }

  static Tensor randn(Shape shape, Rng& rng, T stddev, bool requires_grad = false) {
    std::vector<T> v(static_cast<size_t>(shape_numel(shape)));
    for (auto& x : v) x = static_cast<T>(rng.normal()) * stddev;
    return leaf(std::move(shape), std::move(v), requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t numel() const { return static_cast<int64_t>(node_->val.size()); }
  int64_t dim(size_t i) const { return node_->shape[i]; }

  std::vector<T>& data() { return node_->val; }
  const std::vector<T>& data() const { return node_->val; }
  std::vector<T>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool requires_grad() const { return node_->requires_grad; }
  bool needs_grad() const { return node_->needs_grad; }
  const char* op() const { return node_->op; }

  T item() const {
    if (numel() != 1) throw std::invalid_argument("item: tensor is not scalar, shape " + shape_str(shape()));
    return node_->val[0];
  }

  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
  }

  // New leaf sharing nothing with the graph; gradients stop here.
  Tensor detach() const {
    Shape s = node_->shape;
    std::vector<T> v = node_->val;
    return leaf(std::move(s), std::move(v), false);
  }

  // Reverse-mode sweep from a scalar. Leaf grads accumulate across calls.
  void backward() const {
    if (numel() != 1) {
      throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(shape()));
    }
    // Iterative post-order DFS for the topological order.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        Node<T>* p = n->parents[idx++].get();
        if (p->needs_grad && !visited.count(p)) {
          visited.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->ensure_grad();
    node_->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<T>* n = *it;
      if (n->backward_fn) n->backward_fn(*n);
    }
  }

  std::shared_ptr<Node<T>> node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

namespace detail {

// Builds an op node. Parents are only retained when gradients must flow, so
// inference-style graphs stay flat and cheap.
template <typename T>
Tensor<T> make_op(const char* name, Shape shape, std::vector<T> val,
                  std::vector<Tensor<T>> parents, std::function<void(Node<T>&)> bwd) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->val = std::move(val);
  node->op = name;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.needs_grad();
  node->needs_grad = needs;
  if (needs) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(bwd);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
}

}  // namespace detail

}  // namespace lgan
