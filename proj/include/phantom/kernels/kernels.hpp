#pragma once

// Dense double-precision inner loops used by the diff-engine. Every kernel has
// a scalar reference implementation; vectorized variants are selected once at
// startup from the CPU's capabilities and must agree with the reference to
// rounding (FMA contraction is the only permitted difference).
//
// Matrices are row-major and all `_acc` kernels accumulate into the output.

#include <cstddef>
#include <string_view>
#include <vector>

namespace phantom::kernels {

enum class Backend { scalar, avx2, neon };

struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Backend backend;
  const char* name;
  // C(m x n) += A(m x k) * B(k x n)
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C(m x n) += A^T * B with A(k x m), B(k x n)
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C(m x n) += A * B^T with A(m x k), B(n x k)
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  double (*dot)(std::size_t n, const double* x, const double* y);
  // y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // out += x * y (elementwise)
  void (*mul_acc)(std::size_t n, const double* x, const double* y, double* out);
  void (*adam_update)(std::size_t n, double* param, const double* grad, double* m, double* v,
                      const AdamCoefficients& c);
};

const KernelTable& scalar_table();

bool supported(Backend b);
const KernelTable& table(Backend b);  // throws InvalidArgument if unsupported here
std::vector<Backend> supported_backends();
Backend best_backend();

/// The table used by the library. Initialized to best_backend(), or to the
/// backend named by the PHANTOM_KERNELS environment variable.
const KernelTable& active();
void select(Backend b);

std::string_view to_string(Backend b);
Backend backend_from_string(std::string_view name);

}  // namespace phantom::kernels
