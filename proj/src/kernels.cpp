#include "uda/kernels.hpp"

#include <cmath>
#include <vector>

#include <omp.h>

namespace uda::kernels {

namespace {

Backend g_backend = Backend::OpenMP;

// Work thresholds below which the OpenMP path stays serial. Purely a
// scheduling choice; values never depend on it.
constexpr std::size_t kMapGrain = 8192;
constexpr int kRowGrain = 64;
constexpr std::size_t kSumBlock = 1024;

// The per-index body of every kernel is a single lambda shared by both
// execution paths, so the serial reference and the OpenMP variant perform
// the same arithmetic in the same order per output element and agree
// bitwise. Only the scheduling differs.
namespace serial {
template <class F>
inline void for_each(std::size_t n, F&& f) {
  for (std::size_t i = 0; i < n; ++i) f(i);
}
}  // namespace serial

namespace ompar {
template <class F>
inline void for_each(std::size_t n, F&& f) {
#pragma omp parallel for schedule(static) if (n >= 2)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    f(static_cast<std::size_t>(i));
}
}  // namespace ompar

template <class F>
inline void dispatch(std::size_t n, std::size_t grain, F&& f) {
  if (g_backend == Backend::OpenMP && n >= grain)
    ompar::for_each(n, f);
  else
    serial::for_each(n, f);
}

}  // namespace

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }
int max_threads() { return omp_get_max_threads(); }

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  dispatch(static_cast<std::size_t>(m), 2, [=](std::size_t i) {
    double* ci = c + i * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + i * k;
    for (int l = 0; l < k; ++l) {
      const double ail = ai[l];
      const double* bl = b + static_cast<std::size_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += ail * bl[j];
    }
  });
}

void matmul_at_b_acc(const double* a, const double* g, double* c, int m, int k, int n) {
  // c is k x n; row l of c is owned by iteration l.
  dispatch(static_cast<std::size_t>(k), 2, [=](std::size_t l) {
    double* cl = c + l * n;
    for (int i = 0; i < m; ++i) {
      const double ail = a[static_cast<std::size_t>(i) * k + l];
      const double* gi = g + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) cl[j] += ail * gi[j];
    }
  });
}

void matmul_a_bt_acc(const double* g, const double* b, double* c, int m, int k, int n) {
  dispatch(static_cast<std::size_t>(m), 2, [=](std::size_t i) {
    double* ci = c + i * k;
    const double* gi = g + i * n;
    for (int l = 0; l < k; ++l) {
      const double* bl = b + static_cast<std::size_t>(l) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += gi[j] * bl[j];
      ci[l] += acc;
    }
  });
}

void add(const double* a, const double* b, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = a[i] + b[i]; });
}
void sub(const double* a, const double* b, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = a[i] - b[i]; });
}
void mul(const double* a, const double* b, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = a[i] * b[i]; });
}
void scale(const double* a, double s, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = s * a[i]; });
}
void add_scalar(const double* a, double s, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = a[i] + s; });
}
void vexp(const double* a, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = std::exp(a[i]); });
}
void vlog(const double* a, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = std::log(a[i]); });
}
void vrelu(const double* a, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = a[i] > 0.0 ? a[i] : 0.0; });
}
void vpow(const double* a, double e, double* c, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { c[i] = std::pow(a[i], e); });
}
void axpy(double s, const double* x, double* y, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { y[i] += s * x[i]; });
}
void madd(const double* a, const double* b, double* y, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { y[i] += a[i] * b[i]; });
}
void mdiv(const double* a, const double* b, double* y, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { y[i] += a[i] / b[i]; });
}
void relu_backward(const double* x, const double* g, double* y, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) { y[i] += x[i] > 0.0 ? g[i] : 0.0; });
}
void pow_backward(const double* x, double e, const double* g, double* y, std::size_t n) {
  dispatch(n, kMapGrain, [=](std::size_t i) {
    y[i] += (e == 0.0 || (x[i] == 0.0 && e < 1.0)) ? 0.0
                                                   : g[i] * e * std::pow(x[i], e - 1.0);
  });
}

double sum(const double* a, std::size_t n) {
  const std::size_t nb = (n + kSumBlock - 1) / kSumBlock;
  if (nb <= 1) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
  }
  // Fixed-size blocks summed independently, block results combined in index
  // order: the total is the same for any backend and thread count.
  std::vector<double> block(nb, 0.0);
  double* bp = block.data();
  dispatch(nb, 2, [=](std::size_t bi) {
    const std::size_t lo = bi * kSumBlock;
    const std::size_t hi = lo + kSumBlock < n ? lo + kSumBlock : n;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += a[i];
    bp[bi] = acc;
  });
  double total = 0.0;
  for (std::size_t bi = 0; bi < nb; ++bi) total += block[bi];
  return total;
}

void colsum_acc(const double* a, int rows, int cols, double* out) {
  dispatch(static_cast<std::size_t>(cols), 2, [=](std::size_t j) {
    double acc = 0.0;
    for (int i = 0; i < rows; ++i) acc += a[static_cast<std::size_t>(i) * cols + j];
    out[j] += acc;
  });
}

void add_rowvec(const double* a, const double* v, double* c, int rows, int cols) {
  dispatch(static_cast<std::size_t>(rows), kRowGrain, [=](std::size_t i) {
    const double* ai = a + i * cols;
    double* ci = c + i * cols;
    for (int j = 0; j < cols; ++j) ci[j] = ai[j] + v[j];
  });
}

void log_softmax_rows(const double* x, double* y, int rows, int cols) {
  dispatch(static_cast<std::size_t>(rows), kRowGrain, [=](std::size_t i) {
    const double* xi = x + i * cols;
    double* yi = y + i * cols;
    double mx = xi[0];
    for (int j = 1; j < cols; ++j) mx = xi[j] > mx ? xi[j] : mx;
    double z = 0.0;
    for (int j = 0; j < cols; ++j) z += std::exp(xi[j] - mx);
    const double lz = std::log(z) + mx;
    for (int j = 0; j < cols; ++j) yi[j] = xi[j] - lz;
  });
}

void log_softmax_backward_rows(const double* y, const double* gy, double* gx, int rows,
                               int cols) {
  dispatch(static_cast<std::size_t>(rows), kRowGrain, [=](std::size_t i) {
    const double* yi = y + i * cols;
    const double* gi = gy + i * cols;
    double* oi = gx + i * cols;
    double gsum = 0.0;
    for (int j = 0; j < cols; ++j) gsum += gi[j];
    for (int j = 0; j < cols; ++j) oi[j] += gi[j] - std::exp(yi[j]) * gsum;
  });
}

}  // namespace uda::kernels
