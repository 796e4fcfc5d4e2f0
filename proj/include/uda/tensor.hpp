#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "uda/common.hpp"

namespace uda {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

// Dense row-major double tensor with an optional gradient slot. Values are
// immutable once recorded on a tape; grad is written only during backward.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return values.size(); }
  int rows() const;
  int cols() const;

  double* data() { return values.data(); }
  const double* data() const { return values.data(); }
  double at(std::size_t i) const { return values[i]; }
  double at2(int r, int c) const {
    return values[static_cast<std::size_t>(r) * cols() + c];
  }

  void ensure_grad();
  void zero_grad();

  std::vector<double> values;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;

 private:
  Shape shape_;
};

// Reverse-mode tape, rebuilt per forward pass. Ops compute eagerly; backward
// replays the node list once in reverse, accumulating adjoints additively.
// Parameters are external Tensors bound via param(); backward adds into
// their grad slots.
class Tape {
 public:
  using Id = int;
  static constexpr Id kNone = -1;

  Id input(Tensor value);   // data; never receives gradient
  Id param(Tensor& t);      // leaf bound to an external tensor

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id add_scalar(Id a, double s);
  Id mul_scalar(Id a, double s);
  Id exp(Id a);
  Id log(Id a);  // strict: any non-positive element is a numeric_error
  Id relu(Id a);
  Id pow_scalar(Id a, double e);
  Id sum(Id a);
  Id mean(Id a);
  Id max_axis1(Id a);                      // [r x c] -> [r]
  Id add_rowvec(Id a, Id v);               // [r x c] + [c]
  Id log_softmax(Id a);                    // rows of [r x C]
  Id select_rows(Id a, std::vector<int> rows);
  Id pick_per_row(Id a, std::vector<int> cols);  // -> [r]
  Id sqdist(Id a, Id b);                   // ||a - b||^2 over all elements
  Id sqdist_rows(Id x, int i, int j);      // squared distance of two rows
  Id gradient_reverse(Id a, double coeff); // identity forward, -coeff * g back
  Id detach(Id a);                         // forward copy, blocks gradient

  const Tensor& value(Id id) const;
  double scalar_value(Id id) const;
  std::size_t nodes() const { return nodes_.size(); }

  // Accumulates exact reverse-mode gradients into every bound parameter
  // with requires_grad set. loss must be a scalar on this tape.
  void backward(Id loss);
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  enum class Op {
    Input, Param, Matmul, Add, Sub, Mul, AddScalar, MulScalar, Exp, Log,
    Relu, PowScalar, Sum, Mean, MaxAxis1, AddRowvec, LogSoftmax, SelectRows,
    PickPerRow, Sqdist, SqdistRows, GradReverse, Detach,
  };

  struct Node {
    Op op;
    Id a = kNone, b = kNone;
    Tensor value;
    std::vector<double> grad;     // lazily sized during backward
    double scalar = 0.0;          // scalar operand / GRL coeff
    std::vector<int> indices;     // rows / columns payload
    int i0 = 0, i1 = 0;           // row pair for SqdistRows
    Tensor* external = nullptr;   // Param binding
    bool needs_grad = false;
  };

  Id push(Node n);
  Node& at(Id id);
  const Node& at(Id id) const;
  void check(Id id) const;
  void backward_node(Node& n);

  std::vector<Node> nodes_;
  std::size_t last_visits_ = 0;
};

}  // namespace uda
