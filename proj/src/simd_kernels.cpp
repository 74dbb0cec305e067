#include "nlbs/simd_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#define NLBS_X86 1
#include <immintrin.h>
#else
#define NLBS_X86 0
#endif

namespace nlbs::simd {

namespace {

// ---- scalar reference ----

void stencil_scalar(const double* u, std::size_t n, double inv_h2,
                    double inv_2h, double* out) {
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double up = u[j + 1];
        const double um = u[j - 1];
        out[j] = (up - 2.0 * u[j] + um) * inv_h2 - (up - um) * inv_2h;
    }
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        m = std::max(m, std::fabs(a[j] - b[j]));
    }
    return m;
}

// ---- AVX2 ----

#if NLBS_X86

__attribute__((target("avx2,fma")))
void stencil_avx2(const double* u, std::size_t n, double inv_h2,
                  double inv_2h, double* out) {
    if (n < 3) return;
    const __m256d vh2 = _mm256_set1_pd(inv_h2);
    const __m256d v2h = _mm256_set1_pd(inv_2h);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t j = 1;
    for (; j + 4 <= n - 1; j += 4) {
        const __m256d up = _mm256_loadu_pd(u + j + 1);
        const __m256d uc = _mm256_loadu_pd(u + j);
        const __m256d um = _mm256_loadu_pd(u + j - 1);
        const __m256d sum = _mm256_add_pd(up, um);
        const __m256d second = _mm256_fnmadd_pd(two, uc, sum);  // up - 2uc + um
        const __m256d first = _mm256_sub_pd(up, um);
        const __m256d r =
            _mm256_fmsub_pd(second, vh2, _mm256_mul_pd(first, v2h));
        _mm256_storeu_pd(out + j, r);
    }
    for (; j + 1 < n; ++j) {
        const double up = u[j + 1];
        const double um = u[j - 1];
        out[j] = std::fma(up - 2.0 * u[j] + um, inv_h2, -(up - um) * inv_2h);
    }
}

__attribute__((target("avx2")))
double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d vm = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j));
        vm = _mm256_max_pd(vm, _mm256_andnot_pd(signmask, d));
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, vm);
    double m = std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
    for (; j < n; ++j) m = std::max(m, std::fabs(a[j] - b[j]));
    return m;
}

#endif  // NLBS_X86

const Kernels kScalar{stencil_scalar, max_abs_diff_scalar, "scalar"};

#if NLBS_X86
const Kernels kAvx2{stencil_avx2, max_abs_diff_avx2, "avx2"};
#endif

const Kernels& select() {
    if (const char* env = std::getenv("NLBS_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return kScalar;
#if NLBS_X86
        if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return kAvx2;
#endif
    }
#if NLBS_X86
    if (avx2_supported()) return kAvx2;
#endif
    return kScalar;
}

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

bool avx2_supported() {
#if NLBS_X86
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels& avx2_kernels() {
#if NLBS_X86
    return kAvx2;
#else
    return kScalar;
#endif
}

const Kernels& active_kernels() {
    static const Kernels& k = select();
    return k;
}

}  // namespace nlbs::simd
