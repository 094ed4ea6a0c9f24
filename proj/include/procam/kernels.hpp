// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace procam::kernels {

// Data-parallel inner loops shared by the renderer, losses and optimizer.
// A scalar reference implementation always exists; an AVX2 variant is
// selected at runtime when the CPU supports it.  The two are equivalence
// tested; FMA contraction may differ in the last ulps.

struct Ops {
    // sum_i (a[i]-b[i])^2
    double (*sumsq_diff)(const double* a, const double* b, std::size_t n);
    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += s*x[i]
    void (*axpy)(double s, const double* x, double* y, std::size_t n);
    // x[i] *= s
    void (*scale)(double* x, double s, std::size_t n);
    // Adam: m = b1*m+(1-b1)*g; v = b2*v+(1-b2)*g^2;
    //       p -= lr * (m/bc1) / (sqrt(v/bc2)+eps)
    void (*adam_update)(double* p, const double* g, double* m, double* v,
                        std::size_t n, double lr, double b1, double b2,
                        double eps, double bc1, double bc2);
};

enum class Backend { kAuto, kScalar, kAvx2 };

bool avx2_supported();
// Override the dispatch (kAuto re-probes the CPU).
void force_backend(Backend b);
const char* active_backend_name();

const Ops& ops();         // active backend
const Ops& scalar_ops();  // always the reference

}  // namespace procam::kernels
