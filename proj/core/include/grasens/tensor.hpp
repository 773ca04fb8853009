#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace grasens {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tensor;

namespace detail {

// One record of the define-by-run graph. Parents always carry a smaller seq than
// their children, so sorting reachable nodes by seq gives a topological order.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until something is accumulated
  bool requires_grad = false;
  std::uint64_t seq = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
  std::vector<double>& ensure_grad();
};

std::uint64_t next_seq();

}  // namespace detail

// Dense row-major float64 array with optional reverse-mode gradient tracking.
//
// Tensors are cheap handles onto an immutable node. Only leaves may be mutated
// (through mutable_data), which is how optimizers update parameters between
// forward passes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  // Gradient values; a tensor that never received gradient reads as zeros.
  std::vector<double> grad() const;
  void zero_grad();

  // Reverse pass from this scalar. Leaf gradients accumulate across calls.
  void backward() const;

  // Fresh leaf holding a copy of the values.
  Tensor clone_leaf(bool requires_grad) const;

  bool all_finite() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Gradient recording is on by default. While a guard is alive on a thread,
// ops on that thread produce detached results.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Building block for ops defined outside this library's core op set.
// `backward` receives the result node; it is only attached when some parent needs grad.
Tensor make_result(const char* op, Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward);

}  // namespace grasens
