#include "uda/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "uda/kernels.hpp"

namespace uda {

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace

Tensor::Tensor(Shape shape, double fill)
    : values(shape_numel(shape), fill), shape_(std::move(shape)) {}

Tensor::Tensor(Shape shape, std::vector<double> v) : values(std::move(v)), shape_(std::move(shape)) {
  if (values.size() != shape_numel(shape_))
    throw shape_error("tensor data length " + std::to_string(values.size()) +
                      " does not match shape " + shape_str(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

int Tensor::rows() const {
  if (ndim() != 2) throw shape_error("rows() on non-matrix " + shape_str(shape_));
  return shape_[0];
}

int Tensor::cols() const {
  if (ndim() != 2) throw shape_error("cols() on non-matrix " + shape_str(shape_));
  return shape_[1];
}

void Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

Tape::Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Node& Tape::at(Id id) { return nodes_[static_cast<std::size_t>(id)]; }
const Tape::Node& Tape::at(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }

void Tape::check(Id id) const {
  if (id < 0 || id >= static_cast<Id>(nodes_.size()))
    throw shape_error("tensor id " + std::to_string(id) + " is not on this tape");
}

const Tensor& Tape::value(Id id) const {
  check(id);
  return at(id).value;
}

double Tape::scalar_value(Id id) const {
  const Tensor& t = value(id);
  if (t.size() != 1) throw shape_error("scalar_value on tensor " + shape_str(t.shape()));
  return t.values[0];
}

Tape::Id Tape::input(Tensor value) {
  Node n;
  n.op = Op::Input;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Id Tape::param(Tensor& t) {
  Node n;
  n.op = Op::Param;
  n.value = t;  // copy of the current values; t owns the gradient
  n.external = &t;
  n.needs_grad = t.requires_grad;
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  check(a);
  check(b);
  const Tensor& ta = at(a).value;
  const Tensor& tb = at(b).value;
  if (ta.ndim() != 2 || tb.ndim() != 2 || ta.cols() != tb.rows())
    throw shape_error("matmul shape mismatch " + shape_str(ta.shape()) + " * " +
                      shape_str(tb.shape()));
  Node n;
  n.op = Op::Matmul;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.value = Tensor(Shape{ta.rows(), tb.cols()});
  kernels::matmul(ta.data(), tb.data(), n.value.data(), ta.rows(), ta.cols(), tb.cols());
  return push(std::move(n));
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw shape_error(std::string(what) + " shape mismatch " + shape_str(a.shape()) +
                      " vs " + shape_str(b.shape()));
}
}  // namespace

Tape::Id Tape::add(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(at(a).value, at(b).value, "add");
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.value = Tensor(at(a).value.shape());
  kernels::add(at(a).value.data(), at(b).value.data(), n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(at(a).value, at(b).value, "sub");
  Node n;
  n.op = Op::Sub;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.value = Tensor(at(a).value.shape());
  kernels::sub(at(a).value.data(), at(b).value.data(), n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(at(a).value, at(b).value, "mul");
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.value = Tensor(at(a).value.shape());
  kernels::mul(at(a).value.data(), at(b).value.data(), n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::add_scalar(Id a, double s) {
  check(a);
  Node n;
  n.op = Op::AddScalar;
  n.a = a;
  n.scalar = s;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(at(a).value.shape());
  kernels::add_scalar(at(a).value.data(), s, n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::mul_scalar(Id a, double s) {
  check(a);
  Node n;
  n.op = Op::MulScalar;
  n.a = a;
  n.scalar = s;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(at(a).value.shape());
  kernels::scale(at(a).value.data(), s, n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::exp(Id a) {
  check(a);
  Node n;
  n.op = Op::Exp;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(at(a).value.shape());
  kernels::vexp(at(a).value.data(), n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::log(Id a) {
  check(a);
  const Tensor& ta = at(a).value;
  for (double v : ta.values)
    if (!(v > 0.0)) throw numeric_error("log of non-positive value " + fmt_double(v));
  Node n;
  n.op = Op::Log;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(ta.shape());
  kernels::vlog(ta.data(), n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::relu(Id a) {
  check(a);
  Node n;
  n.op = Op::Relu;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(at(a).value.shape());
  kernels::vrelu(at(a).value.data(), n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::pow_scalar(Id a, double e) {
  check(a);
  Node n;
  n.op = Op::PowScalar;
  n.a = a;
  n.scalar = e;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(at(a).value.shape());
  kernels::vpow(at(a).value.data(), e, n.value.data(), n.value.size());
  return push(std::move(n));
}

Tape::Id Tape::sum(Id a) {
  check(a);
  Node n;
  n.op = Op::Sum;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor::scalar(kernels::sum(at(a).value.data(), at(a).value.size()));
  return push(std::move(n));
}

Tape::Id Tape::mean(Id a) {
  check(a);
  const std::size_t count = at(a).value.size();
  if (count == 0) throw shape_error("mean of empty tensor");
  Node n;
  n.op = Op::Mean;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor::scalar(kernels::sum(at(a).value.data(), count) /
                           static_cast<double>(count));
  return push(std::move(n));
}

Tape::Id Tape::max_axis1(Id a) {
  check(a);
  const Tensor& ta = at(a).value;
  const int r = ta.rows(), c = ta.cols();
  if (c < 1) throw shape_error("max_axis1 of empty rows");
  Node n;
  n.op = Op::MaxAxis1;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(Shape{r});
  n.indices.resize(static_cast<std::size_t>(r));  // argmax per row, first wins
  for (int i = 0; i < r; ++i) {
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (ta.at2(i, j) > ta.at2(i, best)) best = j;
    n.indices[static_cast<std::size_t>(i)] = best;
    n.value.values[static_cast<std::size_t>(i)] = ta.at2(i, best);
  }
  return push(std::move(n));
}

Tape::Id Tape::add_rowvec(Id a, Id v) {
  check(a);
  check(v);
  const Tensor& ta = at(a).value;
  const Tensor& tv = at(v).value;
  if (ta.ndim() != 2 || tv.ndim() != 1 || ta.cols() != tv.dim(0))
    throw shape_error("add_rowvec shape mismatch " + shape_str(ta.shape()) + " + " +
                      shape_str(tv.shape()));
  Node n;
  n.op = Op::AddRowvec;
  n.a = a;
  n.b = v;
  n.needs_grad = at(a).needs_grad || at(v).needs_grad;
  n.value = Tensor(ta.shape());
  kernels::add_rowvec(ta.data(), tv.data(), n.value.data(), ta.rows(), ta.cols());
  return push(std::move(n));
}

Tape::Id Tape::log_softmax(Id a) {
  check(a);
  const Tensor& ta = at(a).value;
  if (ta.ndim() != 2 || ta.cols() < 2)
    throw shape_error("log_softmax expects [rows x C], C >= 2; got " +
                      shape_str(ta.shape()));
  Node n;
  n.op = Op::LogSoftmax;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(ta.shape());
  kernels::log_softmax_rows(ta.data(), n.value.data(), ta.rows(), ta.cols());
  return push(std::move(n));
}

Tape::Id Tape::select_rows(Id a, std::vector<int> rows) {
  check(a);
  const Tensor& ta = at(a).value;
  const int r = ta.rows(), c = ta.cols();
  for (int i : rows)
    if (i < 0 || i >= r) throw shape_error("select_rows index out of range");
  Node n;
  n.op = Op::SelectRows;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(Shape{static_cast<int>(rows.size()), c});
  for (std::size_t k = 0; k < rows.size(); ++k)
    std::copy_n(ta.data() + static_cast<std::size_t>(rows[k]) * c, c,
                n.value.data() + k * c);
  n.indices = std::move(rows);
  return push(std::move(n));
}

Tape::Id Tape::pick_per_row(Id a, std::vector<int> cols) {
  check(a);
  const Tensor& ta = at(a).value;
  const int r = ta.rows(), c = ta.cols();
  if (static_cast<int>(cols.size()) != r)
    throw shape_error("pick_per_row needs one column index per row");
  for (int j : cols)
    if (j < 0 || j >= c) throw config_error("label out of range [0," + std::to_string(c) + ")");
  Node n;
  n.op = Op::PickPerRow;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  n.value = Tensor(Shape{r});
  for (int i = 0; i < r; ++i)
    n.value.values[static_cast<std::size_t>(i)] = ta.at2(i, cols[static_cast<std::size_t>(i)]);
  n.indices = std::move(cols);
  return push(std::move(n));
}

Tape::Id Tape::sqdist(Id a, Id b) {
  check(a);
  check(b);
  require_same_shape(at(a).value, at(b).value, "sqdist");
  const Tensor& ta = at(a).value;
  const Tensor& tb = at(b).value;
  Node n;
  n.op = Op::Sqdist;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  double acc = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const double d = ta.values[i] - tb.values[i];
    acc += d * d;
  }
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Tape::Id Tape::sqdist_rows(Id x, int i, int j) {
  check(x);
  const Tensor& tx = at(x).value;
  const int r = tx.rows(), c = tx.cols();
  if (i < 0 || i >= r || j < 0 || j >= r) throw shape_error("sqdist_rows index out of range");
  Node n;
  n.op = Op::SqdistRows;
  n.a = x;
  n.i0 = i;
  n.i1 = j;
  n.needs_grad = at(x).needs_grad;
  const double* ri = tx.data() + static_cast<std::size_t>(i) * c;
  const double* rj = tx.data() + static_cast<std::size_t>(j) * c;
  double acc = 0.0;
  for (int k = 0; k < c; ++k) {
    const double d = ri[k] - rj[k];
    acc += d * d;
  }
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Tape::Id Tape::gradient_reverse(Id a, double coeff) {
  check(a);
  if (coeff < 0.0) throw config_error("gradient_reverse coeff must be >= 0");
  Node n;
  n.op = Op::GradReverse;
  n.a = a;
  n.scalar = coeff;
  n.needs_grad = at(a).needs_grad;
  n.value = at(a).value;  // bitwise identical forward
  return push(std::move(n));
}

Tape::Id Tape::detach(Id a) {
  check(a);
  Node n;
  n.op = Op::Detach;
  n.a = a;
  n.value = at(a).value;
  n.needs_grad = false;
  return push(std::move(n));
}

void Tape::backward(Id loss) {
  check(loss);
  if (at(loss).value.size() != 1) throw shape_error("backward needs a scalar loss");

  for (Node& n : nodes_) n.grad.clear();
  at(loss).grad.assign(1, 1.0);

  last_visits_ = 0;
  for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; --id) {
    ++last_visits_;
    Node& n = at(id);
    if (n.grad.empty()) continue;
    if (n.op == Op::Param && n.external && n.external->requires_grad) {
      n.external->ensure_grad();
      kernels::axpy(1.0, n.grad.data(), n.external->grad.data(), n.grad.size());
      continue;
    }
    backward_node(n);
  }
}

namespace {
inline std::vector<double>& grad_buf(Tensor& shape_like, std::vector<double>& g) {
  if (g.size() != shape_like.size()) g.assign(shape_like.size(), 0.0);
  return g;
}
}  // namespace

void Tape::backward_node(Node& n) {
  auto upstream = [&](Id id) -> std::vector<double>& {
    Node& src = at(id);
    return grad_buf(src.value, src.grad);
  };
  auto wants = [&](Id id) { return id != kNone && at(id).needs_grad; };

  const std::vector<double>& g = n.grad;
  switch (n.op) {
    case Op::Input:
    case Op::Param:
    case Op::Detach:
      break;
    case Op::Matmul: {
      const Tensor& ta = at(n.a).value;
      const Tensor& tb = at(n.b).value;
      const int m = ta.rows(), k = ta.cols(), c = tb.cols();
      if (wants(n.a))
        kernels::matmul_a_bt_acc(g.data(), tb.data(), upstream(n.a).data(), m, k, c);
      if (wants(n.b))
        kernels::matmul_at_b_acc(ta.data(), g.data(), upstream(n.b).data(), m, k, c);
      break;
    }
    case Op::Add:
      if (wants(n.a)) kernels::axpy(1.0, g.data(), upstream(n.a).data(), g.size());
      if (wants(n.b)) kernels::axpy(1.0, g.data(), upstream(n.b).data(), g.size());
      break;
    case Op::Sub:
      if (wants(n.a)) kernels::axpy(1.0, g.data(), upstream(n.a).data(), g.size());
      if (wants(n.b)) kernels::axpy(-1.0, g.data(), upstream(n.b).data(), g.size());
      break;
    case Op::Mul:
      if (wants(n.a))
        kernels::madd(g.data(), at(n.b).value.data(), upstream(n.a).data(), g.size());
      if (wants(n.b))
        kernels::madd(g.data(), at(n.a).value.data(), upstream(n.b).data(), g.size());
      break;
    case Op::AddScalar:
      if (wants(n.a)) kernels::axpy(1.0, g.data(), upstream(n.a).data(), g.size());
      break;
    case Op::MulScalar:
      if (wants(n.a)) kernels::axpy(n.scalar, g.data(), upstream(n.a).data(), g.size());
      break;
    case Op::Exp:
      if (wants(n.a))
        kernels::madd(g.data(), n.value.data(), upstream(n.a).data(), g.size());
      break;
    case Op::Log:
      if (wants(n.a))
        kernels::mdiv(g.data(), at(n.a).value.data(), upstream(n.a).data(), g.size());
      break;
    case Op::Relu:
      if (wants(n.a))
        kernels::relu_backward(at(n.a).value.data(), g.data(), upstream(n.a).data(),
                               g.size());
      break;
    case Op::PowScalar:
      if (wants(n.a))
        kernels::pow_backward(at(n.a).value.data(), n.scalar, g.data(),
                              upstream(n.a).data(), g.size());
      break;
    case Op::Sum:
      if (wants(n.a)) {
        std::vector<double>& ga = upstream(n.a);
        kernels::add_scalar(ga.data(), g[0], ga.data(), ga.size());
      }
      break;
    case Op::Mean:
      if (wants(n.a)) {
        std::vector<double>& ga = upstream(n.a);
        kernels::add_scalar(ga.data(), g[0] / static_cast<double>(ga.size()), ga.data(),
                            ga.size());
      }
      break;
    case Op::MaxAxis1:
      if (wants(n.a)) {
        std::vector<double>& ga = upstream(n.a);
        const int c = at(n.a).value.cols();
        for (std::size_t i = 0; i < n.indices.size(); ++i)
          ga[i * c + static_cast<std::size_t>(n.indices[i])] += g[i];
      }
      break;
    case Op::AddRowvec: {
      const int r = n.value.rows(), c = n.value.cols();
      if (wants(n.a)) kernels::axpy(1.0, g.data(), upstream(n.a).data(), g.size());
      if (wants(n.b)) kernels::colsum_acc(g.data(), r, c, upstream(n.b).data());
      break;
    }
    case Op::LogSoftmax:
      if (wants(n.a))
        kernels::log_softmax_backward_rows(n.value.data(), g.data(),
                                           upstream(n.a).data(), n.value.rows(),
                                           n.value.cols());
      break;
    case Op::SelectRows:
      if (wants(n.a)) {
        std::vector<double>& ga = upstream(n.a);
        const int c = at(n.a).value.cols();
        // scatter-add; duplicate row indices are legal, so this stays serial
        for (std::size_t k = 0; k < n.indices.size(); ++k)
          for (int j = 0; j < c; ++j)
            ga[static_cast<std::size_t>(n.indices[k]) * c + j] += g[k * c + j];
      }
      break;
    case Op::PickPerRow:
      if (wants(n.a)) {
        std::vector<double>& ga = upstream(n.a);
        const int c = at(n.a).value.cols();
        for (std::size_t i = 0; i < n.indices.size(); ++i)
          ga[i * c + static_cast<std::size_t>(n.indices[i])] += g[i];
      }
      break;
    case Op::Sqdist: {
      const Tensor& ta = at(n.a).value;
      const Tensor& tb = at(n.b).value;
      const double s = 2.0 * g[0];
      if (wants(n.a)) {
        std::vector<double>& ga = upstream(n.a);
        for (std::size_t i = 0; i < ta.size(); ++i)
          ga[i] += s * (ta.values[i] - tb.values[i]);
      }
      if (wants(n.b)) {
        std::vector<double>& gb = upstream(n.b);
        for (std::size_t i = 0; i < ta.size(); ++i)
          gb[i] -= s * (ta.values[i] - tb.values[i]);
      }
      break;
    }
    case Op::SqdistRows:
      if (wants(n.a)) {
        const Tensor& tx = at(n.a).value;
        const int c = tx.cols();
        std::vector<double>& gx = upstream(n.a);
        const double* ri = tx.data() + static_cast<std::size_t>(n.i0) * c;
        const double* rj = tx.data() + static_cast<std::size_t>(n.i1) * c;
        const double s = 2.0 * g[0];
        for (int k = 0; k < c; ++k) {
          const double d = s * (ri[k] - rj[k]);
          gx[static_cast<std::size_t>(n.i0) * c + k] += d;
          gx[static_cast<std::size_t>(n.i1) * c + k] -= d;
        }
      }
      break;
    case Op::GradReverse:
      if (wants(n.a)) kernels::axpy(-n.scalar, g.data(), upstream(n.a).data(), g.size());
      break;
  }
}

}  // namespace uda
