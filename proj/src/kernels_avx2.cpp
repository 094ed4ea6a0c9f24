// SPDX-License-Identifier: Apache-2.0
#include "procam/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define PROCAM_X86 1
#include <immintrin.h>
#else
#define PROCAM_X86 0
#endif

#include <cmath>

namespace procam::kernels {

#if PROCAM_X86

namespace {

__attribute__((target("avx2")))
inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

__attribute__((target("avx2,fma")))
double sumsq_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

__attribute__((target("avx2,fma")))
double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

__attribute__((target("avx2,fma")))
void axpy_avx2(double s, const double* x, double* y, std::size_t n) {
    __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, v);
    }
    for (; i < n; ++i) y[i] += s * x[i];
}

__attribute__((target("avx2")))
void scale_avx2(double* x, double s, std::size_t n) {
    __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= s;
}

__attribute__((target("avx2,fma")))
void adam_avx2(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double b1, double b2, double eps, double bc1,
               double bc2) {
    __m256d vb1 = _mm256_set1_pd(b1), vb1c = _mm256_set1_pd(1 - b1);
    __m256d vb2 = _mm256_set1_pd(b2), vb2c = _mm256_set1_pd(1 - b2);
    __m256d vlr = _mm256_set1_pd(lr), veps = _mm256_set1_pd(eps);
    __m256d vibc1 = _mm256_set1_pd(1.0 / bc1), vibc2 = _mm256_set1_pd(1.0 / bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_fmadd_pd(vb1c, gi, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
        __m256d vi = _mm256_fmadd_pd(vb2c, _mm256_mul_pd(gi, gi),
                                     _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        __m256d mhat = _mm256_mul_pd(mi, vibc1);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, vibc2)), veps);
        __m256d upd = _mm256_mul_pd(vlr, _mm256_div_pd(mhat, denom));
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1 - b1) * g[i];
        v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace

bool avx2_supported() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }

const Ops* avx2_ops_or_null() {
    if (!avx2_supported()) return nullptr;
    static const Ops t{sumsq_diff_avx2, dot_avx2, axpy_avx2, scale_avx2, adam_avx2};
    return &t;
}

#else

bool avx2_supported() { return false; }
const Ops* avx2_ops_or_null() { return nullptr; }

#endif

}  // namespace procam::kernels
