#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cocosum {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  // Adds this node's grad into the grads of its inputs.
  std::function<void(const TensorNode&)> backprop;
};

/// Handle to a dense row-major array. Copies share storage; a tensor that
/// requires grad owns a gradient buffer of the same shape.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<T> values) {
    return Tensor(std::move(shape), std::move(values), false);
  }
  static Tensor parameter(Shape shape, std::vector<T> values) {
    return Tensor(std::move(shape), std::move(values), true);
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> values(shape_size(shape), T{0});
    return Tensor(std::move(shape), std::move(values), requires_grad);
  }
  static Tensor scalar(T v, bool requires_grad = false) { return Tensor({1}, {v}, requires_grad); }
  static Tensor vector(std::vector<T> values, bool requires_grad = false) {
    Shape shape{values.size()};
    return Tensor(std::move(shape), std::move(values), requires_grad);
  }

  /// An empty tensor holds no elements; it is the neutral element of concat.
  bool empty() const { return !node_ || node_->value.empty(); }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_ ? node_->value.size() : 0; }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  std::span<const T> data() const { return node_->value; }
  std::span<T> mutable_data() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }

  T item() const {
    if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
  }
  T at(std::size_t i) const { return node_->value.at(i); }

  void zero_grad() {
    if (node_) std::fill(node_->grad.begin(), node_->grad.end(), T{0});
  }

  const std::shared_ptr<TensorNode<T>>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode<T>> node) : node_(std::move(node)) {}

 private:
  Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
    if (shape_size(shape) != values.size()) {
      throw DimensionError("shape " + shape_string(shape) + " does not match " +
                           std::to_string(values.size()) + " values");
    }
    node_ = std::make_shared<TensorNode<T>>();
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->grad.assign(node_->value.size(), T{0});
  }

  std::shared_ptr<TensorNode<T>> node_;
};

enum class ElementwiseKind { add, sub, hadamard, sigmoid, tanh, leaky_relu };

/// Records differentiable operations in execution order and replays them in
/// reverse for backward(). Operations whose inputs need no gradient (or that
/// run while recording is disabled) are evaluated but not recorded.
template <typename T>
class Tape {
 public:
  using TensorT = Tensor<T>;
  using Node = TensorNode<T>;
  using NodePtr = std::shared_ptr<Node>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // ---- linear algebra -----------------------------------------------------

  /// [m x k] * [k x n] -> [m x n]; [m x k] * [k] -> [m].
  TensorT matmul(const TensorT& a, const TensorT& b) {
    if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.dim(1) != b.dim(0)) {
      throw DimensionError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                           shape_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.rank() == 2 ? b.dim(1) : 1;
    Shape out_shape = b.rank() == 2 ? Shape{m, n} : Shape{m};
    std::vector<T> out(m * n, T{0});
    const T* pa = a.data().data();
    const T* pb = b.data().data();
    for (std::size_t i = 0; i < m; ++i) {
      T* row = out.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = pa[i * k + p];
        const T* brow = pb + p * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
      }
    }
    auto na = a.node(), nb = b.node();
    return emit(std::move(out_shape), std::move(out), {&a, &b}, [na, nb, m, k, n](const Node& o) {
      const T* g = o.grad.data();
      if (na->requires_grad) {
        T* ga = na->grad.data();
        const T* pb = nb->value.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            T acc{0};
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (nb->requires_grad) {
        T* gb = nb->grad.data();
        const T* pa = na->value.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const T av = pa[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
          }
      }
    });
  }

  TensorT transpose(const TensorT& a) {
    if (a.rank() != 2) throw DimensionError("transpose expects a matrix, got " + shape_string(a.shape()));
    const std::size_t m = a.dim(0), n = a.dim(1);
    std::vector<T> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
    auto na = a.node();
    return emit({n, m}, std::move(out), {&a}, [na, m, n](const Node& o) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) na->grad[i * n + j] += o.grad[j * m + i];
    });
  }

  /// Inner product of two equal-length vectors, as a [1] tensor.
  TensorT dot(const TensorT& a, const TensorT& b) {
    require_same_shape("dot", a, b);
    T acc{0};
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
    auto na = a.node(), nb = b.node();
    return emit({1}, {acc}, {&a, &b}, [na, nb](const Node& o) {
      const T g = o.grad[0];
      if (na->requires_grad)
        for (std::size_t i = 0; i < na->value.size(); ++i) na->grad[i] += g * nb->value[i];
      if (nb->requires_grad)
        for (std::size_t i = 0; i < nb->value.size(); ++i) nb->grad[i] += g * na->value[i];
    });
  }

  // ---- elementwise --------------------------------------------------------

  TensorT elementwise(ElementwiseKind kind, const TensorT& a, const TensorT& b = {}, T slope = T(0.2)) {
    switch (kind) {
      case ElementwiseKind::add: return add(a, b);
      case ElementwiseKind::sub: return sub(a, b);
      case ElementwiseKind::hadamard: return hadamard(a, b);
      case ElementwiseKind::sigmoid: return sigmoid(a);
      case ElementwiseKind::tanh: return tanh(a);
      case ElementwiseKind::leaky_relu: return leaky_relu(a, slope);
    }
    throw std::logic_error("unknown elementwise kind");
  }

  TensorT add(const TensorT& a, const TensorT& b) {
    require_same_shape("add", a, b);
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    auto na = a.node(), nb = b.node();
    return emit(a.shape(), std::move(out), {&a, &b}, [na, nb](const Node& o) {
      accumulate(*na, o.grad);
      accumulate(*nb, o.grad);
    });
  }

  TensorT sub(const TensorT& a, const TensorT& b) {
    require_same_shape("sub", a, b);
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    auto na = a.node(), nb = b.node();
    return emit(a.shape(), std::move(out), {&a, &b}, [na, nb](const Node& o) {
      accumulate(*na, o.grad);
      if (nb->requires_grad)
        for (std::size_t i = 0; i < o.grad.size(); ++i) nb->grad[i] -= o.grad[i];
    });
  }

  TensorT hadamard(const TensorT& a, const TensorT& b) {
    require_same_shape("hadamard", a, b);
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    auto na = a.node(), nb = b.node();
    return emit(a.shape(), std::move(out), {&a, &b}, [na, nb](const Node& o) {
      if (na->requires_grad)
        for (std::size_t i = 0; i < o.grad.size(); ++i) na->grad[i] += o.grad[i] * nb->value[i];
      if (nb->requires_grad)
        for (std::size_t i = 0; i < o.grad.size(); ++i) nb->grad[i] += o.grad[i] * na->value[i];
    });
  }

  /// c * a for a fixed real c.
  TensorT scale(const TensorT& a, T c) {
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a.data()[i];
    auto na = a.node();
    return emit(a.shape(), std::move(out), {&a}, [na, c](const Node& o) {
      for (std::size_t i = 0; i < o.grad.size(); ++i) na->grad[i] += c * o.grad[i];
    });
  }

  TensorT sigmoid(const TensorT& a) {
    return unary(a, [](T x) { return stable_sigmoid(x); }, [](T, T y) { return y * (T{1} - y); });
  }

  TensorT tanh(const TensorT& a) {
    return unary(a, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
  }

  TensorT leaky_relu(const TensorT& a, T slope) {
    return unary(
        a, [slope](T x) { return x > T{0} ? x : slope * x; },
        [slope](T x, T) { return x > T{0} ? T{1} : slope; });
  }

  /// log(max(x, floor)); the gradient is zero where the floor is active.
  TensorT log(const TensorT& a, T floor = T(1e-12)) {
    return unary(
        a, [floor](T x) { return std::log(std::max(x, floor)); },
        [floor](T x, T) { return x > floor ? T{1} / x : T{0}; });
  }

  // ---- reductions and normalisation ---------------------------------------

  TensorT sum(const TensorT& a) {
    T acc{0};
    for (T v : a.data()) acc += v;
    auto na = a.node();
    return emit({1}, {acc}, {&a}, [na](const Node& o) {
      for (auto& g : na->grad) g += o.grad[0];
    });
  }

  /// Numerically stable softmax over a vector (max subtracted first).
  TensorT softmax(const TensorT& v) {
    if (v.empty()) throw DimensionError("softmax of an empty vector");
    if (v.rank() != 1) throw DimensionError("softmax expects a vector, got " + shape_string(v.shape()));
    auto x = v.data();
    const T peak = *std::max_element(x.begin(), x.end());
    std::vector<T> out(x.size());
    T total{0};
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = std::exp(x[i] - peak);
      total += out[i];
    }
    for (auto& e : out) e /= total;
    auto nv = v.node();
    return emit(v.shape(), std::move(out), {&v}, [nv](const Node& o) {
      T inner{0};
      for (std::size_t i = 0; i < o.value.size(); ++i) inner += o.grad[i] * o.value[i];
      for (std::size_t i = 0; i < o.value.size(); ++i) nv->grad[i] += o.value[i] * (o.grad[i] - inner);
    });
  }

  // ---- indexing and reshaping ---------------------------------------------

  /// Row `index` of a matrix, as a vector (embedding lookup).
  TensorT row(const TensorT& table, std::size_t index) {
    if (table.rank() != 2) throw DimensionError("row() expects a matrix, got " + shape_string(table.shape()));
    if (index >= table.dim(0)) {
      throw std::out_of_range("row index " + std::to_string(index) + " out of range for table " +
                              shape_string(table.shape()));
    }
    const std::size_t d = table.dim(1);
    std::vector<T> out(table.data().begin() + index * d, table.data().begin() + (index + 1) * d);
    auto nt = table.node();
    return emit({d}, std::move(out), {&table}, [nt, index, d](const Node& o) {
      for (std::size_t j = 0; j < d; ++j) nt->grad[index * d + j] += o.grad[j];
    });
  }

  /// Element `index` of a vector, as a [1] tensor.
  TensorT pick(const TensorT& v, std::size_t index) {
    if (index >= v.size()) throw std::out_of_range("pick index " + std::to_string(index) + " out of range");
    auto nv = v.node();
    return emit({1}, {v.data()[index]}, {&v}, [nv, index](const Node& o) { nv->grad[index] += o.grad[0]; });
  }

  /// Stacks equal-length vectors as the rows of a matrix.
  TensorT stack(const std::vector<TensorT>& rows) {
    if (rows.empty()) throw DimensionError("stack of zero rows");
    const std::size_t d = rows.front().size();
    std::vector<T> out;
    out.reserve(rows.size() * d);
    std::vector<const TensorT*> inputs;
    std::vector<NodePtr> nodes;
    for (const auto& r : rows) {
      if (r.rank() != 1 || r.size() != d) {
        throw DimensionError("stack: row shape " + shape_string(r.shape()) + " differs from [" +
                             std::to_string(d) + "]");
      }
      out.insert(out.end(), r.data().begin(), r.data().end());
      inputs.push_back(&r);
      nodes.push_back(r.node());
    }
    return emit_many({rows.size(), d}, std::move(out), inputs, [nodes, d](const Node& o) {
      for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i]->requires_grad)
          for (std::size_t j = 0; j < d; ++j) nodes[i]->grad[j] += o.grad[i * d + j];
    });
  }

  /// sum_i weights[i] * rows[i] for equal-length vectors rows and a [n] weight vector.
  TensorT weighted_sum(const std::vector<TensorT>& rows, const TensorT& weights) {
    if (rows.empty() || weights.rank() != 1 || weights.size() != rows.size()) {
      throw DimensionError("weighted_sum: " + std::to_string(rows.size()) + " rows with weights " +
                           (weights.empty() ? std::string("[]") : shape_string(weights.shape())));
    }
    const std::size_t d = rows.front().size();
    std::vector<T> out(d, T{0});
    std::vector<const TensorT*> inputs{&weights};
    std::vector<NodePtr> nodes;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].rank() != 1 || rows[i].size() != d) {
        throw DimensionError("weighted_sum: row shape " + shape_string(rows[i].shape()) + " differs from [" +
                             std::to_string(d) + "]");
      }
      const T w = weights.data()[i];
      for (std::size_t j = 0; j < d; ++j) out[j] += w * rows[i].data()[j];
      inputs.push_back(&rows[i]);
      nodes.push_back(rows[i].node());
    }
    auto nw = weights.node();
    return emit_many({d}, std::move(out), inputs, [nodes, nw, d](const Node& o) {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& r = *nodes[i];
        if (nw->requires_grad) {
          T acc{0};
          for (std::size_t j = 0; j < d; ++j) acc += o.grad[j] * r.value[j];
          nw->grad[i] += acc;
        }
        if (r.requires_grad) {
          const T w = nw->value[i];
          for (std::size_t j = 0; j < d; ++j) nodes[i]->grad[j] += w * o.grad[j];
        }
      }
    });
  }

  /// Joins two tensors along `axis`; an empty operand is returned through unchanged.
  TensorT concat(const TensorT& a, const TensorT& b, std::size_t axis = 0) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.rank() != b.rank() || axis >= a.rank() || a.rank() > 2) {
      throw DimensionError("concat: incompatible shapes " + shape_string(a.shape()) + " and " +
                           shape_string(b.shape()) + " on axis " + std::to_string(axis));
    }
    for (std::size_t d = 0; d < a.rank(); ++d) {
      if (d != axis && a.dim(d) != b.dim(d)) {
        throw DimensionError("concat: incompatible shapes " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()) + " on axis " + std::to_string(axis));
      }
    }
    // Split every row into an a-part and a b-part; for axis 0 there is one "row".
    const std::size_t rows = (a.rank() == 2 && axis == 1) ? a.dim(0) : 1;
    const std::size_t wa = a.size() / rows, wb = b.size() / rows;
    std::vector<T> out;
    out.reserve(a.size() + b.size());
    for (std::size_t r = 0; r < rows; ++r) {
      out.insert(out.end(), a.data().begin() + r * wa, a.data().begin() + (r + 1) * wa);
      out.insert(out.end(), b.data().begin() + r * wb, b.data().begin() + (r + 1) * wb);
    }
    Shape shape = a.shape();
    shape[axis] += b.dim(axis);
    auto na = a.node(), nb = b.node();
    return emit(std::move(shape), std::move(out), {&a, &b}, [na, nb, rows, wa, wb](const Node& o) {
      for (std::size_t r = 0; r < rows; ++r) {
        const T* g = o.grad.data() + r * (wa + wb);
        if (na->requires_grad)
          for (std::size_t j = 0; j < wa; ++j) na->grad[r * wa + j] += g[j];
        if (nb->requires_grad)
          for (std::size_t j = 0; j < wb; ++j) nb->grad[r * wb + j] += g[wa + j];
      }
    });
  }

  /// Concatenates vectors end to end.
  TensorT concat(const std::vector<TensorT>& parts) {
    std::vector<T> out;
    std::vector<const TensorT*> inputs;
    std::vector<NodePtr> nodes;
    for (const auto& p : parts) {
      if (p.empty()) continue;
      if (p.rank() != 1) throw DimensionError("concat(list) expects vectors, got " + shape_string(p.shape()));
      out.insert(out.end(), p.data().begin(), p.data().end());
      inputs.push_back(&p);
      nodes.push_back(p.node());
    }
    if (out.empty()) return {};
    const std::size_t n = out.size();
    return emit_many({n}, std::move(out), inputs, [nodes](const Node& o) {
      std::size_t offset = 0;
      for (const auto& nd : nodes) {
        if (nd->requires_grad)
          for (std::size_t j = 0; j < nd->value.size(); ++j) nd->grad[j] += o.grad[offset + j];
        offset += nd->value.size();
      }
    });
  }

  // ---- backward -----------------------------------------------------------

  /// Accumulates d(loss)/d(leaf) into the grad buffer of every leaf that
  /// requires grad. Intermediate grads are reset first, so repeated calls on
  /// the same tape are reproducible; leaf grads keep accumulating until
  /// zero_grad().
  void backward(const TensorT& loss) {
    if (loss.empty() || loss.size() != 1) {
      throw DimensionError("backward requires a scalar loss, got shape " +
                           (loss.empty() ? std::string("[]") : shape_string(loss.shape())));
    }
    if (!loss.requires_grad()) return;
    auto it = std::find(nodes_.rbegin(), nodes_.rend(), loss.node());
    if (it == nodes_.rend()) {
      // A leaf loss: its own gradient is one.
      loss.node()->grad[0] += T{1};
      return;
    }
    for (auto& n : nodes_) std::fill(n->grad.begin(), n->grad.end(), T{0});
    loss.node()->grad[0] = T{1};
    for (; it != nodes_.rend(); ++it) (*it)->backprop(**it);
  }

 private:
  static T stable_sigmoid(T x) {
    if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
  }

  static void accumulate(Node& n, const std::vector<T>& g) {
    if (!n.requires_grad) return;
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
  }

  static void require_same_shape(const char* op, const TensorT& a, const TensorT& b) {
    if (a.empty() || b.empty() || a.shape() != b.shape()) {
      throw DimensionError(std::string(op) + ": shape mismatch " +
                           (a.empty() ? std::string("[]") : shape_string(a.shape())) + " vs " +
                           (b.empty() ? std::string("[]") : shape_string(b.shape())));
    }
  }

  template <typename Fwd, typename Deriv>
  TensorT unary(const TensorT& a, Fwd fwd, Deriv deriv) {
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.data()[i]);
    auto na = a.node();
    return emit(a.shape(), std::move(out), {&a}, [na, deriv](const Node& o) {
      for (std::size_t i = 0; i < o.grad.size(); ++i) na->grad[i] += o.grad[i] * deriv(na->value[i], o.value[i]);
    });
  }

  template <typename Fn>
  TensorT emit(Shape shape, std::vector<T> value, std::initializer_list<const TensorT*> inputs, Fn&& fn) {
    return emit_many(std::move(shape), std::move(value), std::vector<const TensorT*>(inputs), std::forward<Fn>(fn));
  }

  template <typename Fn>
  TensorT emit_many(Shape shape, std::vector<T> value, const std::vector<const TensorT*>& inputs, Fn&& fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    const bool needs_grad =
        recording_ && std::any_of(inputs.begin(), inputs.end(), [](const TensorT* t) { return t->requires_grad(); });
    if (needs_grad) {
      node->requires_grad = true;
      node->grad.assign(node->value.size(), T{0});
      node->backprop = std::forward<Fn>(fn);
      nodes_.push_back(node);
    }
    return TensorT(std::move(node));
  }

  std::vector<NodePtr> nodes_;
  bool recording_ = true;
};

}  // namespace cocosum
