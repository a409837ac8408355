#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lmsfd::kernels {

// Dense double-precision kernels over row-major buffers. Every entry has a
// scalar reference implementation; SIMD variants are selected at runtime and
// must agree with the reference within floating-point reassociation error
// (the equivalence tests pin the tolerance).
struct KernelTable {
    const char* name;

    // C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n]
    void (*gemm_nn)(double* C, const double* A, const double* B,
                    std::size_t m, std::size_t n, std::size_t k, bool accumulate);
    // C[m x n] = (accumulate ? C : 0) + A[m x k] * B[n x k]^T
    void (*gemm_nt)(double* C, const double* A, const double* B,
                    std::size_t m, std::size_t n, std::size_t k, bool accumulate);
    // C[m x n] = (accumulate ? C : 0) + A[k x m]^T * B[k x n]
    void (*gemm_tn)(double* C, const double* A, const double* B,
                    std::size_t m, std::size_t n, std::size_t k, bool accumulate);

    void (*add)(double* out, const double* a, const double* b, std::size_t n);
    void (*sub)(double* out, const double* a, const double* b, std::size_t n);
    void (*mul)(double* out, const double* a, const double* b, std::size_t n);
    void (*scale)(double* out, const double* a, double s, std::size_t n);
    // y += a * x
    void (*axpy)(double* y, double a, const double* x, std::size_t n);
    void (*relu_fwd)(double* out, const double* x, std::size_t n);
    // dx += dy where x > 0
    void (*relu_bwd_acc)(double* dx, const double* x, const double* dy, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
};

extern const KernelTable scalar_table;

// Table chosen once per process: AVX2 when compiled in and supported by the
// CPU, scalar otherwise. LMSFD_KERNELS=scalar|avx2 forces a choice.
const KernelTable& active();

// Lookup by name for equivalence tests; throws ConfigError if unavailable.
const KernelTable& by_name(const std::string& name);

// Names of all tables usable on this machine.
std::vector<std::string> available();

}  // namespace lmsfd::kernels
