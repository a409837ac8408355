// AVX2/FMA kernel variants. Compiled with -mavx2 -mfma; only reachable after
// the dispatcher has confirmed CPU support.

#include "lmsfd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cstring>

namespace lmsfd::kernels {
namespace {

// Horizontal sum of a 4-lane double vector.
inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void gemm_nn(double* C, const double* A, const double* B,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* c_row = C + i * n;
        if (!accumulate) std::memset(c_row, 0, n * sizeof(double));
        const double* a_row = A + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double a = a_row[p];
            const double* b_row = B + p * n;
            const __m256d av = _mm256_set1_pd(a);
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d c = _mm256_loadu_pd(c_row + j);
                c = _mm256_fmadd_pd(av, _mm256_loadu_pd(b_row + j), c);
                _mm256_storeu_pd(c_row + j, c);
            }
            for (; j < n; ++j) {
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
            __m256d acc = _mm256_setzero_pd();
            std::size_t p = 0;
            for (; p + 4 <= k; p += 4) {
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(a_row + p),
                                      _mm256_loadu_pd(b_row + p), acc);
            }
            double s = hsum(acc);
            for (; p < k; ++p) {
                s += a_row[p] * b_row[p];
            }
            c_row[j] = accumulate ? c_row[j] + s : s;
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
            const __m256d av = _mm256_set1_pd(a);
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d c = _mm256_loadu_pd(c_row + j);
                c = _mm256_fmadd_pd(av, _mm256_loadu_pd(b_row + j), c);
                _mm256_storeu_pd(c_row + j, c);
            }
            for (; j < n; ++j) {
                c_row[j] += a * b_row[j];
            }
        }
    }
}

void add(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double* out, const double* a, double s, std::size_t n) {
    const __m256d sv = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), sv));
    }
    for (; i < n; ++i) out[i] = a[i] * s;
}

void axpy(double* y, double a, const double* x, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void relu_fwd(double* out, const double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_acc(double* dx, const double* x, const double* dy, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), gated));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
    }
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

}  // namespace

const KernelTable avx2_table = {
    "avx2",
    gemm_nn, gemm_nt, gemm_tn,
    add, sub, mul, scale, axpy,
    relu_fwd, relu_bwd_acc,
    sum, dot,
};

}  // namespace lmsfd::kernels

#endif  // __AVX2__ && __FMA__
