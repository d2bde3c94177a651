#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace scene_informer::nn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until a gradient flows here
  bool requires_grad = false;
  bool leaf = true;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // adds this->grad into parents' grads

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

// Gradient recording is on by default; a NoGradGuard disables it for the
// current thread (inference on a frozen model).
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

// While alive, piecewise ops on this thread (relu, clamp, log's floor,
// max_pool) append the branch each element took. Finite-difference checks use
// it to spot perturbations that cross a kink.
class BranchTrace {
 public:
  BranchTrace();
  ~BranchTrace();
  BranchTrace(const BranchTrace&) = delete;
  BranchTrace& operator=(const BranchTrace&) = delete;

  const std::vector<std::uint32_t>& branches() const { return branches_; }
  // Appends to the innermost active trace; no-op when none is active.
  static void record(std::uint32_t branch);
  static bool active();

 private:
  std::vector<std::uint32_t> branches_;
  BranchTrace* previous_;
};

// Dense row-major tensor with reverse-mode autodiff. Copies share storage.
//
// Gradients of leaf tensors accumulate across backward() calls until
// zero_grad(). A graph can be differentiated once: backward() releases the
// intermediate nodes and a second call on the same root throws
// Error(kGraphConsumed).
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, T value);
  static Tensor from(Shape shape, std::vector<T> values);
  static Tensor scalar(T value);
  static Tensor parameter(Shape shape, std::vector<T> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  // Direct writes are meant for leaves (parameters, inputs).
  std::span<T> mutable_data() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }

  T item() const;
  T at(std::size_t i) const { return node_->value.at(i); }
  T at(std::size_t row, std::size_t col) const { return node_->value.at(row * node_->shape.at(1) + col); }

  void zero_grad();
  void backward() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node<T>> node_;
};

using Mask = std::vector<std::uint8_t>;

// Core ops. All throw Error(kShapeMismatch) naming the op and shapes.
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// x [m, in] * w [in, out] + b [out]
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
// Same shapes, or `b` 1-D matching the last axis of `a` (row broadcast).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
template <typename T> Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t start, std::size_t length);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
// Natural log with the input clamped at 1e-12 (zero gradient below the clamp).
template <typename T> Tensor<T> log(const Tensor<T>& a);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
// log(1 + exp(a)), evaluated stably.
template <typename T> Tensor<T> softplus(const Tensor<T>& a);
template <typename T> Tensor<T> clamp(const Tensor<T>& a, T lo, T hi);
template <typename T> Tensor<T> softmax(const Tensor<T>& a, std::size_t axis);
template <typename T> Tensor<T> log_softmax(const Tensor<T>& a, std::size_t axis);
// Normalizes over the last axis, then applies gamma/beta (1-D, last-axis sized).
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5));
// Max over `axis` (removed from the result); gradient goes to the first maximum.
template <typename T> Tensor<T> max_pool(const Tensor<T>& a, std::size_t axis);
// Entries where mask != 0 are replaced by `value` and receive no gradient.
template <typename T> Tensor<T> masked_fill(const Tensor<T>& a, const Mask& mask, T value);
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
// Rows of a 2-D tensor, in the given order (repeats allowed).
template <typename T> Tensor<T> gather_rows(const Tensor<T>& a, const std::vector<std::size_t>& rows);
// Flat-index gather producing a 1-D tensor.
template <typename T> Tensor<T> take(const Tensor<T>& a, const std::vector<std::size_t>& indices);
// Row-wise bivariate Gaussian negative log density. params [M, 5] holds
// (mu_x, mu_y, sigma_x, sigma_y, rho); targets holds M (x, y) pairs. Returns [M].
template <typename T> Tensor<T> bivariate_nll(const Tensor<T>& params, const std::vector<T>& targets);

}  // namespace scene_informer::nn
