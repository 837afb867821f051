#pragma once

// Shared reduction tree. Leaves of at most kLeaf elements accumulate into four
// interleaved lanes (element i goes to lane i % 4) and finish as
// (l0 + l1) + (l2 + l3); larger ranges split at a multiple of four and add
// the halves. Every ISA implements the leaf with exactly this order.

#include <cstddef>

namespace darkscope::kernels::detail {

inline constexpr std::size_t kLeaf = 256;

template <class Leaf>
double pairwise(const double* x, std::size_t len, const Leaf& leaf) {
    if (len <= kLeaf) return leaf(x, len);
    std::size_t half = (len / 2) & ~std::size_t{3};
    return pairwise(x, half, leaf) + pairwise(x + half, len - half, leaf);
}

/// Complement-tracking power: returns 1 - r^n given r and x = 1 - r, without
/// forming the difference. Uses 1 - ab = (1 - a) + a(1 - b).
inline double one_minus_pow(double r, double x, unsigned n) {
    double acc = 1.0, acc_c = 0.0;
    double base = r, base_c = x;
    while (n) {
        if (n & 1u) {
            acc_c = acc_c + acc * base_c;
            acc = acc * base;
        }
        base_c = base_c + base * base_c;
        base = base * base;
        n >>= 1;
    }
    return acc_c;
}

inline double predictive_cdf_scalar(double delta, unsigned count, double mean) {
    double s = static_cast<double>(count) * mean;
    double denom = s + delta;
    return one_minus_pow(s / denom, delta / denom, count);
}

}  // namespace darkscope::kernels::detail
