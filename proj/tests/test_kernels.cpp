#include <cmath>
#include <vector>

#include "doctest.h"
#include "procam/kernels.hpp"
#include "procam/rng.hpp"

using namespace procam;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -2, double hi = 2) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
    Rng rng(42);
    const auto& k = kernels::scalar_ops();
    for (std::size_t n : {0ul, 1ul, 3ul, 17ul, 256ul, 1000ul}) {
        auto a = random_vec(rng, n), b = random_vec(rng, n);
        double ss = 0, dp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ss += (a[i] - b[i]) * (a[i] - b[i]);
            dp += a[i] * b[i];
        }
        CHECK(k.sumsq_diff(a.data(), b.data(), n) == doctest::Approx(ss).epsilon(1e-12));
        CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(dp).epsilon(1e-12));

        auto y = b;
        k.axpy(0.37, a.data(), y.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y[i] == doctest::Approx(b[i] + 0.37 * a[i]).epsilon(1e-14));

        auto x = a;
        k.scale(x.data(), -1.5, n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(x[i] == doctest::Approx(-1.5 * a[i]).epsilon(1e-14));
    }
}

TEST_CASE("adam kernel matches the textbook update") {
    Rng rng(9);
    std::size_t n = 137;
    auto p = random_vec(rng, n), g = random_vec(rng, n);
    auto m = random_vec(rng, n, 0, 1), v = random_vec(rng, n, 0, 1);
    auto p2 = p, m2 = m, v2 = v;

    double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    int t = 7;
    double bc1 = 1 - std::pow(b1, t), bc2 = 1 - std::pow(b2, t);

    kernels::scalar_ops().adam_update(p.data(), g.data(), m.data(), v.data(), n, lr,
                                      b1, b2, eps, bc1, bc2);
    for (std::size_t i = 0; i < n; ++i) {
        m2[i] = b1 * m2[i] + (1 - b1) * g[i];
        v2[i] = b2 * v2[i] + (1 - b2) * g[i] * g[i];
        p2[i] -= lr * (m2[i] / bc1) / (std::sqrt(v2[i] / bc2) + eps);
    }
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(p[i] == doctest::Approx(p2[i]).epsilon(1e-14));
        CHECK(m[i] == doctest::Approx(m2[i]).epsilon(1e-14));
        CHECK(v[i] == doctest::Approx(v2[i]).epsilon(1e-14));
    }
}

TEST_CASE("avx2 kernels agree with scalar") {
    if (!kernels::avx2_supported()) {
        MESSAGE("avx2 not available on this machine, skipping");
        return;
    }
    kernels::force_backend(kernels::Backend::kAvx2);
    const auto& fast = kernels::ops();
    const auto& ref = kernels::scalar_ops();
    Rng rng(1234);
    for (std::size_t n : {1ul, 4ul, 7ul, 64ul, 1023ul, 4096ul}) {
        auto a = random_vec(rng, n), b = random_vec(rng, n);
        CHECK(fast.sumsq_diff(a.data(), b.data(), n) ==
              doctest::Approx(ref.sumsq_diff(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(fast.dot(a.data(), b.data(), n) ==
              doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));

        auto y1 = b, y2 = b;
        fast.axpy(1.7, a.data(), y1.data(), n);
        ref.axpy(1.7, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-13));

        auto p1 = a, p2 = a;
        auto m1 = random_vec(rng, n, 0, 1);
        auto v1 = random_vec(rng, n, 0, 1);
        auto m2 = m1, v2 = v1;
        fast.adam_update(p1.data(), b.data(), m1.data(), v1.data(), n, 1e-2, 0.9,
                         0.999, 1e-8, 0.5, 0.3);
        ref.adam_update(p2.data(), b.data(), m2.data(), v2.data(), n, 1e-2, 0.9,
                        0.999, 1e-8, 0.5, 0.3);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-12));
            CHECK(v1[i] == doctest::Approx(v2[i]).epsilon(1e-12));
        }
    }
    kernels::force_backend(kernels::Backend::kAuto);
}
