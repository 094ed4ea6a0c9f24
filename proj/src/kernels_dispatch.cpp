// SPDX-License-Identifier: Apache-2.0
#include <atomic>

#include "procam/kernels.hpp"

namespace procam::kernels {

const Ops* avx2_ops_or_null();  // kernels_avx2.cpp

namespace {
std::atomic<Backend> g_backend{Backend::kAuto};
}

void force_backend(Backend b) { g_backend.store(b); }

const Ops& ops() {
    Backend b = g_backend.load();
    if (b == Backend::kScalar) return scalar_ops();
    const Ops* avx = avx2_ops_or_null();
    if (b == Backend::kAvx2) return avx ? *avx : scalar_ops();
    return avx ? *avx : scalar_ops();
}

const char* active_backend_name() {
    return &ops() == &scalar_ops() ? "scalar" : "avx2";
}

}  // namespace procam::kernels
