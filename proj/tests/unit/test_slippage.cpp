#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "darkscope/rng.hpp"
#include "darkscope/slippage.hpp"
#include "support/stats.hpp"
#include "support/tape_builders.hpp"

namespace darkscope {
namespace {

using testing::dark;
using testing::secs;

PricePath two_point(double from, double to, double tau = 5.0) {
    return PricePath({{0, std::log(from)}, {secs(tau), std::log(to)}});
}

TEST(PricePath, RejectsBadSamples) {
    EXPECT_THROW(PricePath({{5, 0.0}, {5, 1.0}}), DomainError);
    EXPECT_THROW(PricePath({{5, 0.0}, {4, 1.0}}), DomainError);
    EXPECT_THROW(PricePath({{5, NAN}}), DomainError);
    EXPECT_THROW(PricePath({{0, 0.0}}, {{10, 5, 1.0}}), DomainError);
    EXPECT_THROW(PricePath({{0, 0.0}}, {{0, 10, 1.0}, {5, 20, 1.0}}), DomainError);
}

TEST(PricePath, LocfDriftAndImpact) {
    PricePath p({{0, 1.0}, {secs(10), 2.0}}, {{secs(2), secs(4), 5.0}}, {{7, secs(1), 3.0, 2.0}});
    EXPECT_EQ(p.log_mid_at(0), 1.0);
    EXPECT_NEAR(p.log_mid_at(secs(2)), 1.0 + 1.5e-4, 1e-15);             // half the impact
    EXPECT_NEAR(p.log_mid_at(secs(3)), 1.0 + (5.0 + 3.0) * 1e-4, 1e-15);  // 1 s of drift, full impact
    EXPECT_NEAR(p.log_mid_at(secs(9)), 1.0 + 13.0e-4, 1e-15);
    EXPECT_NEAR(p.log_mid_at(secs(10)), 2.0 + 13.0e-4, 1e-15);
    EXPECT_THROW(p.log_mid_at(-1), DomainError);

    PricePath bare = p.without_impacts([](std::int64_t id) { return id == 7; });
    EXPECT_NEAR(bare.log_mid_at(secs(9)), 1.0 + 10.0e-4, 1e-15);
    EXPECT_EQ(p.without_impacts([](std::int64_t) { return false; }), p);
}

TEST(PricePath, ImpactSumMatchesBruteForce) {
    CounterRng rng(30);
    std::vector<PricePath::Impact> impacts;
    for (int i = 0; i < 300; ++i) {
        impacts.push_back({i, secs(rng.uniform() * 1000), rng.normal(), 0.5 + rng.uniform() * 5});
    }
    PricePath p({{0, 0.0}}, {}, impacts);
    for (int q = 0; q < 500; ++q) {
        Nanos t = secs(rng.uniform() * 1100);
        double want = 0.0;
        for (const auto& im : impacts) {
            if (t <= im.ts) continue;
            want += im.bp * std::min(1.0, to_seconds(t - im.ts) / im.tau_s);
        }
        ASSERT_NEAR(p.log_mid_at(t) * 1e4, want, 1e-9);
    }
}

TEST(PricePath, LineRoundTrip) {
    PricePath p({{0, 4.6}, {secs(1), 4.61}}, {{0, secs(1), 0.1}}, {{3, 5, -1.5, 5.0}});
    std::stringstream ss;
    write_path(ss, p);
    EXPECT_EQ(parse_path(ss), p);
    std::istringstream bad(R"({"kind":"lit","ts":1})");
    EXPECT_THROW(parse_path(bad), ParseError);
}

TEST(PostFillSlippage, FlatPathIsZero) {
    PricePath flat = two_point(100.0, 100.0);
    EXPECT_EQ(*post_fill_slippage(dark(0, Side::Buy), flat, {}), 0.0);
    EXPECT_EQ(*post_fill_slippage(dark(0, Side::Sell), flat, {}), 0.0);
}

TEST(PostFillSlippage, SignedMove) {
    PricePath up = two_point(100.0, 100.01);
    double buy = *post_fill_slippage(dark(0, Side::Buy), up, {});
    EXPECT_NEAR(buy, 1.0, 0.01);
    EXPECT_NEAR(buy, 1e4 * std::log(100.01 / 100.0), 1e-9);
    EXPECT_EQ(*post_fill_slippage(dark(0, Side::Sell), up, {}), -buy);
}

TEST(PostFillSlippage, UsesFillMidAndCensors) {
    PricePath up = two_point(100.0, 100.01);
    TapeEvent f = dark(0);
    f.mid = 100.01;
    EXPECT_NEAR(*post_fill_slippage(f, up, {}), 0.0, 1e-9);
    EXPECT_FALSE(post_fill_slippage(dark(secs(1)), up, {}));
    TapeEvent l = f;
    l.kind = EventKind::LitPrint;
    EXPECT_THROW(post_fill_slippage(l, up, {}), DomainError);
    EXPECT_THROW(post_fill_slippage(dark(0), up, {0.0}), DomainError);
}

TEST(SlippageProperties, SignAntisymmetryAndUnits) {
    CounterRng rng(31);
    std::vector<PricePath::Sample> s;
    double x = std::log(50.0);
    for (int i = 0; i < 1000; ++i) {
        s.push_back({secs(i * 0.5), x});
        x += rng.normal() * 1e-4;
    }
    PricePath path(s);
    std::vector<PricePath::Sample> scaled = s;
    const double c = 123.456;
    for (auto& v : scaled) v.log_mid += std::log(c);
    PricePath path_c(scaled);
    for (int i = 0; i < 200; ++i) {
        TapeEvent f = dark(secs(rng.uniform() * 490), Side::Buy);
        TapeEvent g = f;
        g.side = Side::Sell;
        double a = *post_fill_slippage(f, path, {});
        EXPECT_EQ(*post_fill_slippage(g, path, {}), -a);
        EXPECT_NEAR(*post_fill_slippage(f, path_c, {}), a, 1e-9);
    }
}

TEST(MeanSlippage, Basics) {
    std::vector<double> sym{1.0, -1.0};
    auto st = mean_slippage(sym);
    EXPECT_EQ(st.mean, 0.0);
    EXPECT_EQ(*st.t_stat, 0.0);
    std::vector<double> flat{2.0, 2.0, 2.0};
    auto d = mean_slippage(flat);
    EXPECT_TRUE(d.degenerate());
    EXPECT_EQ(d.stddev, 0.0);
    EXPECT_THROW(mean_slippage(std::vector<double>{1.0}), DomainError);
    std::vector<double> v{1.0, 2.0, 3.0, 6.0};
    auto m = mean_slippage(v);
    EXPECT_DOUBLE_EQ(m.mean, 3.0);
    EXPECT_NEAR(m.stddev, std::sqrt(14.0 / 3.0), 1e-14);
    EXPECT_NEAR(*m.t_stat, 3.0 * 2.0 / std::sqrt(14.0 / 3.0), 1e-13);
}

TEST(MeanSlippage, OverFillsCountsCensored) {
    PricePath up = two_point(100.0, 100.01, 6.0);
    std::vector<TapeEvent> fills{dark(0, Side::Buy), dark(secs(1), Side::Sell), dark(secs(2), Side::Buy)};
    auto st = mean_slippage(fills, up, {5.0});
    EXPECT_EQ(st.count, 2u);
    EXPECT_EQ(st.censored, 1u);
}

TEST(MinFillsBound, Values) {
    EXPECT_EQ(min_fills_bound(0.5, 12.0), 576.0);
    EXPECT_EQ(min_fills_bound(2.0, 2.0), 1.0);
    EXPECT_EQ(min_fills_bound(1.0, 3.0), 9.0);
    EXPECT_TRUE(std::isinf(min_fills_bound(0.0, 1.0)));
    EXPECT_THROW(min_fills_bound(1.0, 0.0), DomainError);
    CounterRng rng(32);
    for (int i = 0; i < 100; ++i) {
        double mu = rng.normal() * 3.0, sigma = rng.exponential(10.0);
        EXPECT_NEAR(min_fills_bound(mu, sigma) * (mu / sigma) * (mu / sigma), 1.0, 1e-14);
    }
}

TEST(MeanSlippage, DriftlessFalsePositiveRate) {
    CounterRng root(33);
    int hits = 0;
    for (int seed = 0; seed < 1000; ++seed) {
        CounterRng rng = root.split(static_cast<std::uint64_t>(seed));
        std::vector<double> s(200);
        for (double& v : s) v = rng.normal() * 12.0;
        hits += *mean_slippage(s).t_stat > 2.0;
    }
    // One-sided t > 2 has probability about 2.3%; allow sampling noise.
    EXPECT_LE(hits, 50);
}

TEST(ArrivalSlippage, VwapAgainstArrival) {
    std::vector<double> px{100.0, 101.0}, sz{1.0, 3.0};
    double vwap = (100.0 + 303.0) / 4.0;
    EXPECT_NEAR(arrival_slippage_bp(Side::Buy, px, sz, 100.0), 1e4 * std::log(vwap / 100.0), 1e-10);
    EXPECT_NEAR(arrival_slippage_bp(Side::Sell, px, sz, 100.0), -1e4 * std::log(vwap / 100.0), 1e-10);
    EXPECT_THROW(arrival_slippage_bp(Side::Buy, {}, {}, 100.0), DomainError);
    EXPECT_THROW(arrival_slippage_bp(Side::Unknown, px, sz, 100.0), DomainError);
}

TEST(BucketReport, SinglePopulatedBucket) {
    std::vector<FillOutcome> f(10, FillOutcome{0.05, 3.0, 1.0});
    auto rows = bucket_report(f, 10);
    ASSERT_EQ(rows.size(), 10u);
    EXPECT_EQ(rows[0].n, 10u);
    EXPECT_DOUBLE_EQ(*rows[0].mean_bp, 3.0);
    EXPECT_EQ(*rows[0].stderr_bp, 0.0);
    for (std::size_t b = 1; b < 10; ++b) {
        EXPECT_EQ(rows[b].n, 0u);
        EXPECT_FALSE(rows[b].mean_bp);
    }
    std::vector<FillOutcome> edge{{1.0, 1.0, 1.0}, {0.1, 2.0, 1.0}, {std::nullopt, 5.0, 1.0}, {0.5, std::nullopt, 1.0}};
    auto e = bucket_report(edge, 10);
    EXPECT_EQ(e[9].n, 1u);
    EXPECT_EQ(e[1].n, 1u);
    EXPECT_THROW(bucket_report(edge, 0), DomainError);
}

TEST(SizeThresholdReport, Shares) {
    std::vector<FillOutcome> f;
    for (int i = 0; i < 100; ++i) f.push_back({i % 2 ? 0.01 : 0.5, std::nullopt, 1000.0 * i});
    std::vector<double> th{0.0, 50'000.0, 1e9};
    auto rows = size_threshold_report(f, th, 0.05);
    EXPECT_EQ(rows[0].cohort, 100u);
    EXPECT_DOUBLE_EQ(*rows[0].share, 0.5);
    EXPECT_EQ(rows[1].cohort, 50u);
    EXPECT_EQ(rows[2].cohort, 0u);
    EXPECT_FALSE(rows[2].share);
    EXPECT_THROW(size_threshold_report({}, th, 0.05), DomainError);
}

TEST(PathFromTape, StepsThroughPrices) {
    Tape t;
    t.symbol = "XYZ";
    t.events = {testing::lit(0, Side::Buy, 100.0), testing::lit(5, Side::Buy, 101.0), dark(5, Side::Buy)};
    t.events[2].mid = 100.5;
    PricePath p = path_from_tape(t);
    EXPECT_EQ(p.samples().size(), 2u);
    EXPECT_DOUBLE_EQ(p.log_mid_at(5), std::log(100.5));
    EXPECT_THROW(path_from_tape(Tape{}), DomainError);
}

}  // namespace
}  // namespace darkscope
