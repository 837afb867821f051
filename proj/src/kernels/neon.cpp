#if defined(__aarch64__)

#include <arm_neon.h>

#include "kernels/isa_tables.hpp"
#include "kernels/reduce.hpp"

namespace darkscope::kernels::detail {

namespace {

// Two float64x2 registers stand in for the four reduction lanes.

void predictive_cdf(const double* delta, const std::uint32_t* count, const double* mean, double* out,
                    std::size_t len) {
    const float64x2_t one = vdupq_n_f64(1.0);
    const float64x2_t zero = vdupq_n_f64(0.0);
    const uint64x2_t bit = vdupq_n_u64(1);
    std::size_t i = 0;
    for (; i + 2 <= len; i += 2) {
        uint64x2_t n = vmovl_u32(vld1_u32(count + i));
        float64x2_t s = vmulq_f64(vcvtq_f64_u64(n), vld1q_f64(mean + i));
        float64x2_t d = vld1q_f64(delta + i);
        float64x2_t denom = vaddq_f64(s, d);
        float64x2_t base = vdivq_f64(s, denom);
        float64x2_t base_c = vdivq_f64(d, denom);
        float64x2_t acc = one, acc_c = zero;
        while (vmaxvq_u32(vreinterpretq_u32_u64(n)) != 0) {
            uint64x2_t take = vceqq_u64(vandq_u64(n, bit), bit);
            float64x2_t next_c = vaddq_f64(acc_c, vmulq_f64(acc, base_c));
            float64x2_t next = vmulq_f64(acc, base);
            acc_c = vbslq_f64(take, next_c, acc_c);
            acc = vbslq_f64(take, next, acc);
            base_c = vaddq_f64(base_c, vmulq_f64(base, base_c));
            base = vmulq_f64(base, base);
            n = vshrq_n_u64(n, 1);
        }
        vst1q_f64(out + i, acc_c);
    }
    for (; i < len; ++i) out[i] = predictive_cdf_scalar(delta[i], count[i], mean[i]);
}

double finish(float64x2_t lo, float64x2_t hi, const double* tail, std::size_t rem, double center, bool squared) {
    double lane[4];
    vst1q_f64(lane, lo);
    vst1q_f64(lane + 2, hi);
    for (std::size_t j = 0; j < rem; ++j) {
        double v = tail[j] - center;
        lane[j] += squared ? v * v : tail[j];
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum_leaf(const double* x, std::size_t len) {
    float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= len; i += 4) {
        lo = vaddq_f64(lo, vld1q_f64(x + i));
        hi = vaddq_f64(hi, vld1q_f64(x + i + 2));
    }
    return finish(lo, hi, x + i, len - i, 0.0, false);
}

double sq_leaf(const double* x, std::size_t len, double center) {
    const float64x2_t c = vdupq_n_f64(center);
    float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= len; i += 4) {
        float64x2_t d0 = vsubq_f64(vld1q_f64(x + i), c);
        float64x2_t d1 = vsubq_f64(vld1q_f64(x + i + 2), c);
        lo = vaddq_f64(lo, vmulq_f64(d0, d0));
        hi = vaddq_f64(hi, vmulq_f64(d1, d1));
    }
    return finish(lo, hi, x + i, len - i, center, true);
}

double sum(const double* x, std::size_t len) { return pairwise(x, len, sum_leaf); }

double sum_sq_dev(const double* x, std::size_t len, double center) {
    return pairwise(x, len, [center](const double* p, std::size_t n) { return sq_leaf(p, n, center); });
}

}  // namespace

const KernelTable kNeonTable{predictive_cdf, sum, sum_sq_dev};

}  // namespace darkscope::kernels::detail

#endif
