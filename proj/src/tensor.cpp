#include "scene_informer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "scene_informer/error.hpp"

namespace scene_informer::nn {

namespace {

thread_local bool g_grad_enabled = true;

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  throw Error(ErrorCode::kShapeMismatch, op + ": " + detail);
}

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

// Builds an op result; the backward closure is only kept when some input
// needs a gradient and recording is enabled.
template <typename T, typename Backward>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::initializer_list<const Tensor<T>*> inputs,
                      Backward&& backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->leaf = false;
  bool needs = false;
  for (const Tensor<T>* in : inputs) needs = needs || in->requires_grad();
  if (needs && g_grad_enabled) {
    node->requires_grad = true;
    for (const Tensor<T>* in : inputs) node->parents.push_back(in->node());
    node->backward = std::forward<Backward>(backward);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> make_result_list(Shape shape, std::vector<T> value, const std::vector<Tensor<T>>& inputs,
                           std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->leaf = false;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (needs && g_grad_enabled) {
    node->requires_grad = true;
    for (const auto& in : inputs) node->parents.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

// Gradient buffer of parent `i`, or nullptr when it does not need one.
template <typename T>
T* parent_grad(Node<T>& out, std::size_t i) {
  Node<T>& p = *out.parents[i];
  if (!p.requires_grad) return nullptr;
  return p.ensure_grad().data();
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) shape_error(op, "axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// C[m,n] += A[m,k] * B[k,n], all row-major and contiguous.
template <typename T>
void gemm_acc(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
std::vector<T> transposed(const T* a, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = a[i * cols + j];
  }
  return out;
}

template <typename T, typename F, typename G>
Tensor<T> unary(const Tensor<T>& a, F forward, G derivative) {
  std::vector<T> out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return make_result<T>(a.shape(), std::move(out), {&a}, [derivative](Node<T>& o) {
    T* ga = parent_grad(o, 0);
    if (!ga) return;
    const auto& x = o.parents[0]->value;
    for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * derivative(x[i], o.value[i]);
  });
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? ", " : "") << shape[i];
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

bool grad_enabled() { return g_grad_enabled; }

namespace {
thread_local BranchTrace* g_branch_trace = nullptr;
}  // namespace

BranchTrace::BranchTrace() : previous_(g_branch_trace) { g_branch_trace = this; }
BranchTrace::~BranchTrace() { g_branch_trace = previous_; }
void BranchTrace::record(std::uint32_t branch) {
  if (g_branch_trace) g_branch_trace->branches_.push_back(branch);
}
bool BranchTrace::active() { return g_branch_trace != nullptr; }
NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
  return full(std::move(shape), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<T>(n, value));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values) {
  if (shape_numel(shape) != values.size()) {
    shape_error("from", "shape " + shape_string(shape) + " needs " + std::to_string(shape_numel(shape)) +
                            " values, got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
  return from({}, {value});
}

template <typename T>
Tensor<T> Tensor<T>::parameter(Shape shape, std::vector<T> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) shape_error("item", "tensor of shape " + shape_string(shape()) + " is not a scalar");
  return node_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) shape_error("backward", "loss must be a scalar, got shape " + shape_string(shape()));
  if (node_->consumed) throw Error(ErrorCode::kGraphConsumed, "backward called twice on the same graph");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<T>* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  for (Node<T>* n : order) {
    if (n->leaf) continue;
    n->backward = nullptr;
    n->parents.clear();
    std::vector<T>().swap(n->grad);
    n->consumed = true;
  }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    shape_error("matmul", shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n, T(0));
  gemm_acc(m, k, n, a.data().data(), b.data().data(), out.data());
  return make_result<T>({m, n}, std::move(out), {&a, &b}, [m, k, n](Node<T>& o) {
    const auto& av = o.parents[0]->value;
    const auto& bv = o.parents[1]->value;
    if (T* ga = parent_grad(o, 0)) {
      const auto bt = transposed(bv.data(), k, n);
      gemm_acc(m, n, k, o.grad.data(), bt.data(), ga);
    }
    if (T* gb = parent_grad(o, 1)) {
      const auto at = transposed(av.data(), m, k);
      gemm_acc(k, m, n, at.data(), o.grad.data(), gb);
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || x.dim(1) != w.dim(0) || b.dim(0) != w.dim(1)) {
    shape_error("linear", "x " + shape_string(x.shape()) + ", w " + shape_string(w.shape()) + ", b " +
                              shape_string(b.shape()));
  }
  const std::size_t m = x.dim(0), k = x.dim(1), n = w.dim(1);
  std::vector<T> out(m * n);
  const auto bias = b.data();
  for (std::size_t i = 0; i < m; ++i) std::copy(bias.begin(), bias.end(), out.begin() + static_cast<std::ptrdiff_t>(i * n));
  gemm_acc(m, k, n, x.data().data(), w.data().data(), out.data());
  return make_result<T>({m, n}, std::move(out), {&x, &w, &b}, [m, k, n](Node<T>& o) {
    const auto& xv = o.parents[0]->value;
    const auto& wv = o.parents[1]->value;
    if (T* gx = parent_grad(o, 0)) {
      const auto wt = transposed(wv.data(), k, n);
      gemm_acc(m, n, k, o.grad.data(), wt.data(), gx);
    }
    if (T* gw = parent_grad(o, 1)) {
      const auto xt = transposed(xv.data(), m, k);
      gemm_acc(k, m, n, xt.data(), o.grad.data(), gw);
    }
    if (T* gb = parent_grad(o, 2)) {
      for (std::size_t i = 0; i < m; ++i) {
        const T* g = o.grad.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[j];
      }
    }
  });
}

namespace {

enum class Binary { kAdd, kSub, kMul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, Binary kind, const char* op) {
  const bool same = a.shape() == b.shape();
  const bool row = !same && b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.dim(0) && kind != Binary::kMul;
  if (!same && !row) shape_error(op, shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  const std::size_t n = a.numel();
  const std::size_t width = b.numel();
  std::vector<T> out(n);
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    const T y = bv[row ? i % width : i];
    out[i] = kind == Binary::kAdd ? av[i] + y : kind == Binary::kSub ? av[i] - y : av[i] * y;
  }
  return make_result<T>(a.shape(), std::move(out), {&a, &b}, [kind, row, width](Node<T>& o) {
    const std::size_t n = o.grad.size();
    if (T* ga = parent_grad(o, 0)) {
      if (kind == Binary::kMul) {
        const auto& bv = o.parents[1]->value;
        for (std::size_t i = 0; i < n; ++i) ga[i] += o.grad[i] * bv[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) ga[i] += o.grad[i];
      }
    }
    if (T* gb = parent_grad(o, 1)) {
      const T sign = kind == Binary::kSub ? T(-1) : T(1);
      if (kind == Binary::kMul) {
        const auto& av = o.parents[0]->value;
        for (std::size_t i = 0; i < n; ++i) gb[i] += o.grad[i] * av[i];
      } else if (row) {
        for (std::size_t i = 0; i < n; ++i) gb[i % width] += sign * o.grad[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) gb[i] += sign * o.grad[i];
      }
    }
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::kAdd, "add");
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::kSub, "sub");
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::kMul, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary(a, [factor](T x) { return factor * x; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) shape_error("concat", "no inputs");
  const Shape& first = parts[0].shape();
  Shape shape = first;
  if (axis >= shape.size()) shape_error("concat", "axis out of range for " + shape_string(first));
  shape[axis] = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size()) shape_error("concat", shape_string(first) + " vs " + shape_string(s));
    shape[axis] += s[axis];
    s[axis] = first[axis];
    if (s != first) shape_error("concat", shape_string(first) + " vs " + shape_string(p.shape()));
  }
  const AxisSplit whole = split_axis(shape, axis, "concat");
  std::vector<T> out(shape_numel(shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t chunk = p.dim(axis) * whole.inner;
    const auto src = p.data();
    for (std::size_t o = 0; o < whole.outer; ++o) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(o * chunk), chunk,
                  out.begin() + static_cast<std::ptrdiff_t>(o * whole.n * whole.inner + offset * whole.inner));
    }
    offset += p.dim(axis);
  }
  return make_result_list<T>(shape, std::move(out), parts, [whole, offsets](Node<T>& o) {
    for (std::size_t k = 0; k < o.parents.size(); ++k) {
      T* g = parent_grad(o, k);
      if (!g) continue;
      const std::size_t chunk = o.parents[k]->value.size() / whole.outer;
      for (std::size_t r = 0; r < whole.outer; ++r) {
        const T* src = o.grad.data() + r * whole.n * whole.inner + offsets[k] * whole.inner;
        for (std::size_t i = 0; i < chunk; ++i) g[r * chunk + i] += src[i];
      }
    }
  });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t start, std::size_t length) {
  const AxisSplit s = split_axis(a.shape(), axis, "slice");
  if (start + length > s.n) {
    shape_error("slice", "range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                             ") exceeds axis of " + shape_string(a.shape()));
  }
  Shape shape = a.shape();
  shape[axis] = length;
  std::vector<T> out(s.outer * length * s.inner);
  const auto src = a.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((o * s.n + start) * s.inner), length * s.inner,
                out.begin() + static_cast<std::ptrdiff_t>(o * length * s.inner));
  }
  return make_result<T>(std::move(shape), std::move(out), {&a}, [s, start, length](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    for (std::size_t r = 0; r < s.outer; ++r) {
      T* dst = g + (r * s.n + start) * s.inner;
      const T* src = o.grad.data() + r * length * s.inner;
      for (std::size_t i = 0; i < length * s.inner; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() != 2) shape_error("transpose", "expected rank 2, got " + shape_string(a.shape()));
  const std::size_t r = a.dim(0), c = a.dim(1);
  return make_result<T>({c, r}, transposed(a.data().data(), r, c), {&a}, [r, c](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += o.grad[j * r + i];
    }
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    shape_error("reshape", shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  std::vector<T> values(a.data().begin(), a.data().end());
  return make_result<T>(std::move(shape), std::move(values), {&a}, [](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  if (BranchTrace::active()) {
    for (const T x : a.data()) BranchTrace::record(x > T(0));
  }
  return unary(a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  if (BranchTrace::active()) {
    for (const T x : a.data()) BranchTrace::record(x > T(1e-12));
  }
  return unary(a, [](T x) { return std::log(std::max(x, T(1e-12))); },
               [](T x, T) { return x > T(1e-12) ? T(1) / x : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary(a,
               [](T x) {
                 if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
                 const T e = std::exp(x);
                 return e / (T(1) + e);
               },
               [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x))); },
               [](T x, T) {
                 if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
                 const T e = std::exp(x);
                 return e / (T(1) + e);
               });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  if (BranchTrace::active()) {
    for (const T x : a.data()) BranchTrace::record(x < lo ? 0 : (x > hi ? 2 : 1));
  }
  return unary(a, [lo, hi](T x) { return std::clamp(x, lo, hi); },
               [lo, hi](T x, T) { return (x >= lo && x <= hi) ? T(1) : T(0); });
}

namespace {

template <typename T>
Tensor<T> softmax_impl(const Tensor<T>& a, std::size_t axis, bool log_space) {
  const AxisSplit s = split_axis(a.shape(), axis, log_space ? "log_softmax" : "softmax");
  const auto x = a.data();
  std::vector<T> out(a.numel());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < s.n; ++k) mx = std::max(mx, x[base + k * s.inner]);
      if (mx == -std::numeric_limits<T>::infinity()) {
        // Every entry masked: no probability mass anywhere.
        for (std::size_t k = 0; k < s.n; ++k) out[base + k * s.inner] = log_space ? mx : T(0);
        continue;
      }
      T total = T(0);
      for (std::size_t k = 0; k < s.n; ++k) total += std::exp(x[base + k * s.inner] - mx);
      const T log_total = std::log(total);
      for (std::size_t k = 0; k < s.n; ++k) {
        const T shifted = x[base + k * s.inner] - mx;
        out[base + k * s.inner] = log_space ? shifted - log_total : std::exp(shifted) / total;
      }
    }
  }
  return make_result<T>(a.shape(), std::move(out), {&a}, [s, log_space](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    for (std::size_t r = 0; r < s.outer; ++r) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = r * s.n * s.inner + i;
        if (log_space) {
          // d/dx_k = g_k - softmax_k * sum(g)
          T gsum = T(0);
          for (std::size_t k = 0; k < s.n; ++k) gsum += o.grad[base + k * s.inner];
          for (std::size_t k = 0; k < s.n; ++k) {
            const std::size_t idx = base + k * s.inner;
            const T y = o.value[idx];
            const T p = y == -std::numeric_limits<T>::infinity() ? T(0) : std::exp(y);
            g[idx] += o.grad[idx] - p * gsum;
          }
        } else {
          // d/dx_k = y_k * (g_k - sum_j g_j y_j)
          T dotp = T(0);
          for (std::size_t k = 0; k < s.n; ++k) dotp += o.grad[base + k * s.inner] * o.value[base + k * s.inner];
          for (std::size_t k = 0; k < s.n; ++k) {
            const std::size_t idx = base + k * s.inner;
            g[idx] += o.value[idx] * (o.grad[idx] - dotp);
          }
        }
      }
    }
  });
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& a, std::size_t axis) {
  return softmax_impl(a, axis, false);
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& a, std::size_t axis) {
  return softmax_impl(a, axis, true);
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (x.rank() < 1 || gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != x.shape().back() ||
      beta.dim(0) != x.shape().back()) {
    shape_error("layer_norm", "x " + shape_string(x.shape()) + ", gamma " + shape_string(gamma.shape()) +
                                  ", beta " + shape_string(beta.shape()));
  }
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * d;
    T mu = T(0);
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<T>(d);
    T var = T(0);
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(d);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (row[j] - mu) * inv_std[r];
      out[r * d + j] = gv[j] * xhat[r * d + j] + bv[j];
    }
  }
  return make_result<T>(x.shape(), std::move(out), {&x, &gamma, &beta},
                        [d, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& o) {
                          const auto& gv = o.parents[1]->value;
                          T* gx = parent_grad(o, 0);
                          T* gg = parent_grad(o, 1);
                          T* gb = parent_grad(o, 2);
                          for (std::size_t r = 0; r < rows; ++r) {
                            const T* dy = o.grad.data() + r * d;
                            const T* xh = xhat.data() + r * d;
                            if (gg || gb) {
                              for (std::size_t j = 0; j < d; ++j) {
                                if (gg) gg[j] += dy[j] * xh[j];
                                if (gb) gb[j] += dy[j];
                              }
                            }
                            if (gx) {
                              T mean_dxh = T(0);
                              T mean_dxh_xh = T(0);
                              for (std::size_t j = 0; j < d; ++j) {
                                const T dxh = dy[j] * gv[j];
                                mean_dxh += dxh;
                                mean_dxh_xh += dxh * xh[j];
                              }
                              mean_dxh /= static_cast<T>(d);
                              mean_dxh_xh /= static_cast<T>(d);
                              for (std::size_t j = 0; j < d; ++j) {
                                gx[r * d + j] += inv_std[r] * (dy[j] * gv[j] - mean_dxh - xh[j] * mean_dxh_xh);
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> max_pool(const Tensor<T>& a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis, "max_pool");
  if (s.n == 0) shape_error("max_pool", "empty axis in " + shape_string(a.shape()));
  Shape shape = a.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const auto x = a.data();
  std::vector<T> out(s.outer * s.inner);
  std::vector<std::size_t> arg(out.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = o * s.n * s.inner + i;
      for (std::size_t k = 1; k < s.n; ++k) {
        const std::size_t idx = (o * s.n + k) * s.inner + i;
        if (x[idx] > x[best]) best = idx;
      }
      out[o * s.inner + i] = x[best];
      arg[o * s.inner + i] = best;
      BranchTrace::record(static_cast<std::uint32_t>(best));
    }
  }
  return make_result<T>(std::move(shape), std::move(out), {&a}, [arg = std::move(arg)](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    for (std::size_t i = 0; i < arg.size(); ++i) g[arg[i]] += o.grad[i];
  });
}

template <typename T>
Tensor<T> masked_fill(const Tensor<T>& a, const Mask& mask, T value) {
  if (mask.size() != a.numel()) {
    shape_error("masked_fill", "mask of " + std::to_string(mask.size()) + " for " + shape_string(a.shape()));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i]) out[i] = value;
  }
  return make_result<T>(a.shape(), std::move(out), {&a}, [mask](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      if (!mask[i]) g[i] += o.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = T(0);
  for (const T v : a.data()) total += v;
  return make_result<T>({}, {total}, {&a}, [](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    const std::size_t n = o.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.numel() == 0) shape_error("mean", "empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, const std::vector<std::size_t>& rows) {
  if (a.rank() != 2) shape_error("gather_rows", "expected rank 2, got " + shape_string(a.shape()));
  const std::size_t cols = a.dim(1);
  std::vector<T> out(rows.size() * cols);
  const auto src = a.data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= a.dim(0)) shape_error("gather_rows", "row " + std::to_string(rows[r]) + " out of range for " + shape_string(a.shape()));
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(rows[r] * cols), cols,
                out.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return make_result<T>({rows.size(), cols}, std::move(out), {&a}, [rows, cols](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < cols; ++j) g[rows[r] * cols + j] += o.grad[r * cols + j];
    }
  });
}

template <typename T>
Tensor<T> take(const Tensor<T>& a, const std::vector<std::size_t>& indices) {
  std::vector<T> out(indices.size());
  const auto src = a.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.numel()) shape_error("take", "index " + std::to_string(indices[i]) + " out of range for " + shape_string(a.shape()));
    out[i] = src[indices[i]];
  }
  return make_result<T>({indices.size()}, std::move(out), {&a}, [indices](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    for (std::size_t i = 0; i < indices.size(); ++i) g[indices[i]] += o.grad[i];
  });
}

template <typename T>
Tensor<T> bivariate_nll(const Tensor<T>& params, const std::vector<T>& targets) {
  if (params.rank() != 2 || params.dim(1) != 5 || targets.size() != 2 * params.dim(0)) {
    shape_error("bivariate_nll", "params " + shape_string(params.shape()) + " with " +
                                     std::to_string(targets.size()) + " target values");
  }
  const std::size_t m = params.dim(0);
  const auto p = params.data();
  const T log_two_pi = static_cast<T>(std::log(2.0 * std::numbers::pi));
  std::vector<T> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T dx = targets[2 * i] - p[5 * i];
    const T dy = targets[2 * i + 1] - p[5 * i + 1];
    const T sx = p[5 * i + 2], sy = p[5 * i + 3], r = p[5 * i + 4];
    const T q = T(1) - r * r;
    const T z = dx * dx / (sx * sx) + dy * dy / (sy * sy) - T(2) * r * dx * dy / (sx * sy);
    out[i] = log_two_pi + std::log(sx) + std::log(sy) + T(0.5) * std::log(q) + z / (T(2) * q);
  }
  return make_result<T>({m}, std::move(out), {&params}, [targets, m](Node<T>& o) {
    T* g = parent_grad(o, 0);
    if (!g) return;
    const auto& p = o.parents[0]->value;
    for (std::size_t i = 0; i < m; ++i) {
      const T up = o.grad[i];
      const T dx = targets[2 * i] - p[5 * i];
      const T dy = targets[2 * i + 1] - p[5 * i + 1];
      const T sx = p[5 * i + 2], sy = p[5 * i + 3], r = p[5 * i + 4];
      const T q = T(1) - r * r;
      const T sxy = sx * sy;
      const T z = dx * dx / (sx * sx) + dy * dy / (sy * sy) - T(2) * r * dx * dy / sxy;
      const T d_dx = (dx / (sx * sx) - r * dy / sxy) / q;
      const T d_dy = (dy / (sy * sy) - r * dx / sxy) / q;
      g[5 * i] -= up * d_dx;
      g[5 * i + 1] -= up * d_dy;
      g[5 * i + 2] += up * (T(1) / sx + (-dx * dx / (sx * sx * sx) + r * dx * dy / (sx * sxy)) / q);
      g[5 * i + 3] += up * (T(1) / sy + (-dy * dy / (sy * sy * sy) + r * dx * dy / (sy * sxy)) / q);
      g[5 * i + 4] += up * (-r / q - dx * dy / (sxy * q) + z * r / (q * q));
    }
  });
}

#define SI_INSTANTIATE(T)                                                                          \
  template class Tensor<T>;                                                                        \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> scale(const Tensor<T>&, T);                                                   \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                           \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);               \
  template Tensor<T> transpose(const Tensor<T>&);                                                  \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                             \
  template Tensor<T> relu(const Tensor<T>&);                                                       \
  template Tensor<T> tanh(const Tensor<T>&);                                                       \
  template Tensor<T> exp(const Tensor<T>&);                                                        \
  template Tensor<T> log(const Tensor<T>&);                                                        \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                    \
  template Tensor<T> softplus(const Tensor<T>&);                                                   \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                                                \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                       \
  template Tensor<T> log_softmax(const Tensor<T>&, std::size_t);                                   \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);          \
  template Tensor<T> max_pool(const Tensor<T>&, std::size_t);                                      \
  template Tensor<T> masked_fill(const Tensor<T>&, const Mask&, T);                                \
  template Tensor<T> sum(const Tensor<T>&);                                                        \
  template Tensor<T> mean(const Tensor<T>&);                                                       \
  template Tensor<T> gather_rows(const Tensor<T>&, const std::vector<std::size_t>&);               \
  template Tensor<T> take(const Tensor<T>&, const std::vector<std::size_t>&);                      \
  template Tensor<T> bivariate_nll(const Tensor<T>&, const std::vector<T>&);

SI_INSTANTIATE(float)
SI_INSTANTIATE(double)

#undef SI_INSTANTIATE

}  // namespace scene_informer::nn
