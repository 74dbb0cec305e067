#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "nlbs/simd_kernels.hpp"

using namespace nlbs;

namespace {

// Deterministic pseudo-random doubles in [-1, 1).
std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    std::vector<double> v(n);
    std::uint64_t z = seed;
    for (auto& x : v) {
        z = z * 6364136223846793005ull + 1442695040888963407ull;
        x = static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
    }
    return v;
}

}  // namespace

TEST_CASE("scalar stencil matches a direct finite-difference evaluation") {
    const auto u = noise(257, 1);
    const double inv_h2 = 123.4, inv_2h = 5.6;
    std::vector<double> out(u.size(), 0.0);
    simd::scalar_kernels().gamma_stencil(u.data(), u.size(), inv_h2, inv_2h,
                                         out.data());
    for (std::size_t j = 1; j + 1 < u.size(); ++j) {
        const double want = (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_h2 -
                            (u[j + 1] - u[j - 1]) * inv_2h;
        CHECK(out[j] == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("stencil leaves the boundary slots untouched") {
    const auto u = noise(64, 2);
    std::vector<double> out(u.size(), 7.5);
    simd::scalar_kernels().gamma_stencil(u.data(), u.size(), 1.0, 1.0,
                                         out.data());
    CHECK(out.front() == 7.5);
    CHECK(out.back() == 7.5);
}

TEST_CASE("scalar max_abs_diff matches a direct reduction") {
    const auto a = noise(131, 3);
    auto b = noise(131, 4);
    b[77] = a[77] + 42.0;
    CHECK(simd::scalar_kernels().max_abs_diff(a.data(), b.data(), a.size()) ==
          doctest::Approx(42.0).epsilon(1e-12));
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!simd::avx2_supported()) return;
    const auto& sc = simd::scalar_kernels();
    const auto& vx = simd::avx2_kernels();
    CHECK(vx.name == "avx2");

    // Sizes straddle the vector width to exercise the remainder loops.
    for (std::size_t n : {3u, 4u, 5u, 8u, 9u, 63u, 64u, 65u, 400u, 1001u}) {
        const auto u = noise(n, 10 + n);
        std::vector<double> a(n, 0.0), b(n, 0.0);
        sc.gamma_stencil(u.data(), n, 400.0, 10.0, a.data());
        vx.gamma_stencil(u.data(), n, 400.0, 10.0, b.data());
        for (std::size_t j = 1; j + 1 < n; ++j) {
            // FMA contraction may differ from the scalar rounding by one ulp
            // scale; the equivalence contract is relative 1e-14.
            CHECK(b[j] == doctest::Approx(a[j]).epsilon(1e-14));
        }

        const auto x = noise(n, 100 + n);
        const auto y = noise(n, 200 + n);
        CHECK(vx.max_abs_diff(x.data(), y.data(), n) ==
              sc.max_abs_diff(x.data(), y.data(), n));
    }
}

TEST_CASE("active kernel set is one of the known variants") {
    const auto& k = simd::active_kernels();
    CHECK((k.name == "scalar" || k.name == "avx2"));
    CHECK(k.gamma_stencil != nullptr);
    CHECK(k.max_abs_diff != nullptr);
}
