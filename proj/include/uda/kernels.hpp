#pragma once

#include <cstddef>

// Dense numeric kernels behind the tensor engine. Each kernel has a serial
// reference implementation and an OpenMP one; the parallel variants split
// work so every output element sees the same arithmetic order as the serial
// reference, which makes the two backends bitwise identical. Reductions are
// blocked (fixed block size, block results combined in index order) so the
// result does not depend on the thread count either.

namespace uda::kernels {

enum class Backend { Serial, OpenMP };

Backend backend();
void set_backend(Backend b);
int max_threads();

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
// c[k x n] += a[m x k]^T * g[m x n]
void matmul_at_b_acc(const double* a, const double* g, double* c, int m, int k, int n);
// c[m x k] += g[m x n] * b[k x n]^T
void matmul_a_bt_acc(const double* g, const double* b, double* c, int m, int k, int n);

void add(const double* a, const double* b, double* c, std::size_t n);
void sub(const double* a, const double* b, double* c, std::size_t n);
void mul(const double* a, const double* b, double* c, std::size_t n);
void scale(const double* a, double s, double* c, std::size_t n);       // c = s*a
void add_scalar(const double* a, double s, double* c, std::size_t n);  // c = a+s
void vexp(const double* a, double* c, std::size_t n);
void vlog(const double* a, double* c, std::size_t n);
void vrelu(const double* a, double* c, std::size_t n);
void vpow(const double* a, double e, double* c, std::size_t n);

void axpy(double s, const double* x, double* y, std::size_t n);          // y += s*x
void madd(const double* a, const double* b, double* y, std::size_t n);   // y += a.*b
void mdiv(const double* a, const double* b, double* y, std::size_t n);   // y += a./b
void relu_backward(const double* x, const double* g, double* y, std::size_t n);  // y += g.*(x>0)
// y += g .* e .* x^(e-1), with the 0^negative case pinned to 0
void pow_backward(const double* x, double e, const double* g, double* y, std::size_t n);

double sum(const double* a, std::size_t n);
void colsum_acc(const double* a, int rows, int cols, double* out);        // out[j] += sum_i a[i,j]
void add_rowvec(const double* a, const double* v, double* c, int rows, int cols);

void log_softmax_rows(const double* x, double* y, int rows, int cols);
// gx += gy - softmax(x) * rowsum(gy); takes y = log_softmax(x)
void log_softmax_backward_rows(const double* y, const double* gy, double* gx, int rows, int cols);

}  // namespace uda::kernels
