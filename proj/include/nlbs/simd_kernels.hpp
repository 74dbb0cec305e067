#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner kernels of the finite-difference engine.
// Scalar reference implementations always exist; an AVX2+FMA variant is
// selected at load time when the CPU supports it. Both variants compute
// in the same operation order so results agree to the last bit except
// where noted in the equivalence tests.

namespace nlbs::simd {

// out[j] = (u[j+1] - 2 u[j] + u[j-1]) * inv_h2 - (u[j+1] - u[j-1]) * inv_2h
// for j in [1, n-2]; out[0] and out[n-1] are left untouched.
// This is the log-price currency-gamma stencil S^2 u_SS = u_xx - u_x.
using StencilFn = void (*)(const double* u, std::size_t n,
                           double inv_h2, double inv_2h, double* out);

// out[j] = max(|a[j] - b[j]|) reduction.
using MaxAbsDiffFn = double (*)(const double* a, const double* b,
                                std::size_t n);

struct Kernels {
    StencilFn gamma_stencil;
    MaxAbsDiffFn max_abs_diff;
    std::string_view name;  // "scalar" or "avx2"
};

// Reference kernels, always available.
const Kernels& scalar_kernels();

// AVX2 kernels; valid only if avx2_supported().
const Kernels& avx2_kernels();

bool avx2_supported();

// Runtime-selected active set (AVX2 when supported, scalar otherwise).
// Overridable via NLBS_SIMD=scalar|avx2 for testing.
const Kernels& active_kernels();

}  // namespace nlbs::simd
