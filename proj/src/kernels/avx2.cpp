#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "kernels/isa_tables.hpp"
#include "kernels/reduce.hpp"

#define DS_AVX2 __attribute__((target("avx2")))

namespace darkscope::kernels::detail {

namespace {

DS_AVX2 void predictive_cdf(const double* delta, const std::uint32_t* count, const double* mean, double* out,
                            std::size_t len) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256i bit = _mm256_set1_epi64x(1);
    std::size_t i = 0;
    for (; i + 4 <= len; i += 4) {
        __m128i n32 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(count + i));
        __m256i n = _mm256_cvtepu32_epi64(n32);
        __m256d s = _mm256_mul_pd(_mm256_cvtepi32_pd(n32), _mm256_loadu_pd(mean + i));
        __m256d d = _mm256_loadu_pd(delta + i);
        __m256d denom = _mm256_add_pd(s, d);
        __m256d base = _mm256_div_pd(s, denom);
        __m256d base_c = _mm256_div_pd(d, denom);
        __m256d acc = one, acc_c = zero;
        while (!_mm256_testz_si256(n, n)) {
            __m256d take = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(n, bit), bit));
            __m256d next_c = _mm256_add_pd(acc_c, _mm256_mul_pd(acc, base_c));
            __m256d next = _mm256_mul_pd(acc, base);
            acc_c = _mm256_blendv_pd(acc_c, next_c, take);
            acc = _mm256_blendv_pd(acc, next, take);
            base_c = _mm256_add_pd(base_c, _mm256_mul_pd(base, base_c));
            base = _mm256_mul_pd(base, base);
            n = _mm256_srli_epi64(n, 1);
        }
        _mm256_storeu_pd(out + i, acc_c);
    }
    for (; i < len; ++i) out[i] = predictive_cdf_scalar(delta[i], count[i], mean[i]);
}

DS_AVX2 double finish(__m256d acc, const double* tail, std::size_t rem, double center, bool squared) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    for (std::size_t j = 0; j < rem; ++j) {
        double v = tail[j] - center;
        lane[j] += squared ? v * v : tail[j];
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

DS_AVX2 double sum_leaf(const double* x, std::size_t len) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= len; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    return finish(acc, x + i, len - i, 0.0, false);
}

DS_AVX2 double sq_leaf(const double* x, std::size_t len, double center) {
    const __m256d c = _mm256_set1_pd(center);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= len; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    return finish(acc, x + i, len - i, center, true);
}

double sum(const double* x, std::size_t len) { return pairwise(x, len, sum_leaf); }

double sum_sq_dev(const double* x, std::size_t len, double center) {
    return pairwise(x, len, [center](const double* p, std::size_t n) { return sq_leaf(p, n, center); });
}

}  // namespace

const KernelTable kAvx2Table{predictive_cdf, sum, sum_sq_dev};

}  // namespace darkscope::kernels::detail

#endif
