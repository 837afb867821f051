#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "darkscope/kernels.hpp"
#include "darkscope/rng.hpp"

namespace darkscope::kernels {
namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Independent evaluation: 1 - (s/(s+d))^n = -expm1(-n * log1p(d/s)), in long double.
double cdf_oracle(double delta, std::uint32_t n, double mean) {
    long double s = static_cast<long double>(n) * mean;
    return static_cast<double>(-std::expm1(-static_cast<long double>(n) * std::log1p(delta / s)));
}

struct Batch {
    std::vector<double> delta, mean;
    std::vector<std::uint32_t> count;
};

Batch random_batch(CounterRng& rng, std::size_t len) {
    Batch b;
    for (std::size_t i = 0; i < len; ++i) {
        double mean = std::exp(rng.normal() * 3.0);
        b.mean.push_back(mean);
        b.delta.push_back(rng.bernoulli(0.05) ? 0.0 : mean * std::exp(rng.normal() * 4.0));
        std::uint32_t n = rng.bernoulli(0.1) ? static_cast<std::uint32_t>(rng() % 2'000'000 + 1)
                                             : static_cast<std::uint32_t>(rng() % 64 + 1);
        b.count.push_back(n);
    }
    return b;
}

TEST(Kernels, ScalarIsAlwaysAvailableAndFirst) {
    auto isas = available_isas();
    ASSERT_FALSE(isas.empty());
    EXPECT_EQ(isas.front(), Isa::Scalar);
    EXPECT_NO_THROW(table(active_isa()));
}

TEST(Kernels, PredictiveCdfMatchesScalarBitForBit) {
    CounterRng rng(1);
    const KernelTable& ref = table(Isa::Scalar);
    for (Isa isa : available_isas()) {
        const KernelTable& k = table(isa);
        for (std::size_t len : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 257u, 1000u}) {
            Batch b = random_batch(rng, len);
            std::vector<double> want(len), got(len);
            ref.predictive_cdf(b.delta.data(), b.count.data(), b.mean.data(), want.data(), len);
            k.predictive_cdf(b.delta.data(), b.count.data(), b.mean.data(), got.data(), len);
            for (std::size_t i = 0; i < len; ++i) {
                ASSERT_TRUE(same_bits(want[i], got[i])) << to_string(isa) << " len " << len << " i " << i;
            }
        }
    }
}

TEST(Kernels, PredictiveCdfMatchesClosedForm) {
    CounterRng rng(2);
    Batch b = random_batch(rng, 5000);
    std::vector<double> out(b.delta.size());
    predictive_cdf(b.delta, b.count, b.mean, out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double want = cdf_oracle(b.delta[i], b.count[i], b.mean[i]);
        // Rounding in the base ratio is raised to the n-th power.
        double rel = 1e-12 + 1e-15 * b.count[i];
        ASSERT_NEAR(out[i], want, rel * std::max(want, 1e-300) + 1e-300)
            << "delta " << b.delta[i] << " n " << b.count[i] << " mean " << b.mean[i];
    }
}

TEST(Kernels, PredictiveCdfKnownValues) {
    EXPECT_EQ(predictive_cdf_one(0.0, 10, 1.0), 0.0);
    EXPECT_NEAR(predictive_cdf_one(1.0, 1, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(predictive_cdf_one(0.01, 10, 1.0), 1.0 - std::pow(10.0 / 10.01, 10), 1e-15);
    // Tiny durations keep full relative precision.
    EXPECT_NEAR(predictive_cdf_one(1e-9, 10, 1.0), 1e-9, 1e-17);
}

TEST(Kernels, ReductionsMatchScalarBitForBit) {
    CounterRng rng(3);
    const KernelTable& ref = table(Isa::Scalar);
    for (Isa isa : available_isas()) {
        const KernelTable& k = table(isa);
        for (std::size_t len : {0u, 1u, 2u, 3u, 4u, 5u, 255u, 256u, 257u, 1023u, 4099u, 100'000u}) {
            std::vector<double> x(len);
            for (double& v : x) v = rng.normal() * std::exp(rng.normal() * 5.0);
            double c = rng.normal();
            ASSERT_TRUE(same_bits(ref.sum(x.data(), len), k.sum(x.data(), len))) << to_string(isa) << " " << len;
            ASSERT_TRUE(same_bits(ref.sum_sq_dev(x.data(), len, c), k.sum_sq_dev(x.data(), len, c)))
                << to_string(isa) << " " << len;
        }
    }
}

TEST(Kernels, ReductionsAreAccurate) {
    CounterRng rng(4);
    std::vector<double> x(200'000);
    long double exact = 0.0L, exact_sq = 0.0L;
    for (double& v : x) {
        v = 1.0 + rng.normal() * 1e-3;
        exact += v;
    }
    double mean = static_cast<double>(exact / x.size());
    for (double v : x) exact_sq += (static_cast<long double>(v) - mean) * (static_cast<long double>(v) - mean);
    EXPECT_NEAR(sum(x), static_cast<double>(exact), 1e-10);
    EXPECT_NEAR(sum_sq_dev(x, mean) / static_cast<double>(exact_sq), 1.0, 1e-10);
    EXPECT_EQ(sum(std::span<const double>{}), 0.0);
}

TEST(Kernels, LengthMismatchThrows) {
    std::vector<double> d(3), m(3), out(2);
    std::vector<std::uint32_t> n(3, 1);
    EXPECT_THROW(predictive_cdf(d, n, m, out), std::invalid_argument);
}

}  // namespace
}  // namespace darkscope::kernels
