// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "procam/kernels.hpp"

namespace procam::kernels {

namespace {

double sumsq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double s, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void scale_scalar(double* x, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

void adam_scalar(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double b1, double b2, double eps, double bc1,
                 double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1 - b1) * g[i];
        v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops t{sumsq_diff_scalar, dot_scalar, axpy_scalar, scale_scalar,
                       adam_scalar};
    return t;
}

}  // namespace procam::kernels
