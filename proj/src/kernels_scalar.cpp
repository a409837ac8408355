#include "lmsfd/kernels.hpp"

#include <cstring>

namespace lmsfd::kernels {
namespace {

void gemm_nn(double* C, const double* A, const double* B,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* c_row = C + i * n;
        if (!accumulate) std::memset(c_row, 0, n * sizeof(double));
        const double* a_row = A + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double a = a_row[p];
            const double* b_row = B + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                c_row[j] += a * b_row[j];
            }
        }
    }
}

void gemm_nt(double* C, const double* A, const double* B,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a_row = A + i * k;
        double* c_row = C + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* b_row = B + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += a_row[p] * b_row[p];
            }
            c_row[j] = accumulate ? c_row[j] + acc : acc;
        }
    }
}

void gemm_tn(double* C, const double* A, const double* B,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
    if (!accumulate) std::memset(C, 0, m * n * sizeof(double));
    for (std::size_t p = 0; p < k; ++p) {
        const double* a_row = A + p * m;
        const double* b_row = B + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = a_row[i];
            double* c_row = C + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                c_row[j] += a * b_row[j];
            }
        }
    }
}

void add(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double* out, const double* a, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void axpy(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void relu_fwd(double* out, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_acc(double* dx, const double* x, const double* dy, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
    }
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

}  // namespace

const KernelTable scalar_table = {
    "scalar",
    gemm_nn, gemm_nt, gemm_tn,
    add, sub, mul, scale, axpy,
    relu_fwd, relu_bwd_acc,
    sum, dot,
};

}  // namespace lmsfd::kernels
