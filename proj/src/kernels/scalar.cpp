#include "kernels/isa_tables.hpp"
#include "kernels/reduce.hpp"

namespace darkscope::kernels::detail {

namespace {

void predictive_cdf(const double* delta, const std::uint32_t* count, const double* mean, double* out,
                    std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) out[i] = predictive_cdf_scalar(delta[i], count[i], mean[i]);
}

double sum_leaf(const double* x, std::size_t len) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < len; ++i) lane[i & 3] += x[i];
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum(const double* x, std::size_t len) { return pairwise(x, len, sum_leaf); }

double sum_sq_dev(const double* x, std::size_t len, double center) {
    auto leaf = [center](const double* p, std::size_t n) {
        double lane[4] = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            double d = p[i] - center;
            lane[i & 3] += d * d;
        }
        return (lane[0] + lane[1]) + (lane[2] + lane[3]);
    };
    return pairwise(x, len, leaf);
}

}  // namespace

const KernelTable kScalarTable{predictive_cdf, sum, sum_sq_dev};

}  // namespace darkscope::kernels::detail
