#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "darkscope/line_format.hpp"
#include "darkscope/policy.hpp"
#include "darkscope/simulator.hpp"
#include "support/tape_builders.hpp"

namespace darkscope {
namespace {

EvidenceLedger ledger_with(std::vector<double> ps) {
    EvidenceLedger l("DARK-A", 5);
    Nanos ts = 0;
    for (double p : ps) l.update(ts += 10, p);
    return l;
}

TEST(Decide, NoActionWithoutEvidence) {
    PolicyConfig cfg;
    VenueState st = initial_state(cfg);
    auto a = decide(ledger_with({0.5, 0.5, 0.5, 0.5, 0.5}), st, cfg);
    EXPECT_EQ(a.kind, PolicyAction::Kind::None);
    EXPECT_EQ(a.venue, "DARK-A");
    EXPECT_EQ(a.trigger.k, 5u);
}

TEST(Decide, FirstTriggerRaisesToSecondRung) {
    PolicyConfig cfg;
    VenueState st = initial_state(cfg);
    EXPECT_EQ(st.min_fill, 5'000.0);
    auto l = ledger_with({0.01, 0.01, 0.01, 0.01, 0.01});
    ASSERT_LT(l.current().combined_p, 0.05);
    auto a = decide(l, st, cfg);
    EXPECT_EQ(a.kind, PolicyAction::Kind::RaiseMinFill);
    EXPECT_EQ(a.notional, 25'000.0);
    EXPECT_EQ(a.ts, 50);
    EXPECT_EQ(a.trigger.combined_p, l.current().combined_p);
}

TEST(Decide, ThirdTriggerPauses) {
    PolicyConfig cfg;
    VenueState st = initial_state(cfg);
    auto l = ledger_with({0.001, 0.001, 0.001});
    auto a1 = decide(l, st, cfg);
    apply(st, a1);
    auto a2 = decide(l, st, cfg);
    EXPECT_EQ(a2.notional, 30'000.0);
    apply(st, a2);
    EXPECT_EQ(st.min_fill, 30'000.0);
    auto a3 = decide(l, st, cfg);
    EXPECT_EQ(a3.kind, PolicyAction::Kind::PauseVenue);
    apply(st, a3);
    EXPECT_TRUE(st.paused);
    EXPECT_EQ(decide(l, st, cfg).kind, PolicyAction::Kind::None);
}

TEST(Decide, RespectsKMin) {
    PolicyConfig cfg;
    VenueState st = initial_state(cfg);
    auto l = ledger_with({1e-10, 1e-10});
    EXPECT_EQ(decide(l, st, cfg).kind, PolicyAction::Kind::None);
    cfg.k_min = 2;
    EXPECT_EQ(decide(l, st, cfg).kind, PolicyAction::Kind::RaiseMinFill);
}

TEST(Decide, PureFunctionOfInputs) {
    PolicyConfig cfg;
    VenueState st = initial_state(cfg);
    st.escalations = 1;
    st.min_fill = 25'000.0;
    auto l = ledger_with({0.02, 0.03, 0.5, 0.9, 0.04});
    auto a = decide(l, st, cfg), b = decide(l, st, cfg);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.notional, b.notional);
    EXPECT_EQ(a.trigger.statistic, b.trigger.statistic);
}

TEST(PolicyConfig, Validation) {
    PolicyConfig cfg;
    EXPECT_NO_THROW(validate(cfg));
    auto bad = [](auto mutate) {
        PolicyConfig c;
        mutate(c);
        return c;
    };
    EXPECT_THROW(validate(bad([](PolicyConfig& c) { c.alpha = 0.0; })), DomainError);
    EXPECT_THROW(validate(bad([](PolicyConfig& c) { c.alpha = 1.0; })), DomainError);
    EXPECT_THROW(validate(bad([](PolicyConfig& c) { c.k_min = 0; })), DomainError);
    EXPECT_THROW(validate(bad([](PolicyConfig& c) { c.min_fill_ladder = {5.0, 5.0}; })), DomainError);
    EXPECT_THROW(validate(bad([](PolicyConfig& c) { c.min_fill_ladder.clear(); })), DomainError);
    EXPECT_EQ(parse_direction_filter("same_side_only"), DirectionFilter::SameSideOnly);
    EXPECT_THROW(parse_direction_filter("sideways"), DomainError);
}

Simulation sim(const std::string& name, std::uint64_t seed, double duration) {
    Scenario s = preset(name);
    s.seed = seed;
    s.duration = duration;
    return simulate(s);
}

TEST(Replay, NeverActsBelowKMin) {
    Simulation s = sim("leaky", 1, 20'000.0);
    PolicyConfig cfg;
    for (std::size_t k_min : {1u, 3u, 5u}) {
        cfg.k_min = k_min;
        auto r = replay(s.tape, s.path, cfg);
        ASSERT_FALSE(r.actions.empty());
        for (const auto& a : r.actions) EXPECT_GE(a.trigger.k, k_min);
    }
}

TEST(Replay, NullActionRateWithinBound) {
    PolicyConfig cfg;
    std::size_t decisions = 0, actions = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        Simulation s = sim("null", seed, 50'000.0);
        auto r = replay(s.tape, s.path, cfg);
        decisions += r.decisions;
        actions += r.actions.size();
    }
    double rate = static_cast<double>(actions) / static_cast<double>(decisions);
    EXPECT_LE(rate, cfg.alpha + 2.0 * std::sqrt(cfg.alpha / static_cast<double>(decisions)));
}

TEST(Replay, InertPolicyChangesNothing) {
    Simulation s = sim("leaky", 2, 10'000.0);
    PolicyConfig cfg;
    cfg.alpha = 1e-300;
    cfg.min_fill_ladder = {0.0, 1.0};
    auto r = replay(s.tape, s.path, cfg);
    EXPECT_TRUE(r.actions.empty());
    EXPECT_EQ(r.fills_dropped, 0u);
    for (const auto& o : r.orders) EXPECT_EQ(*o.slippage_on_bp, o.slippage_off_bp);
    EXPECT_EQ(r.reduction(), 0.0);
}

TEST(Replay, LeakyVenueGetsThrottled) {
    Simulation s = sim("leaky", 3, 40'000.0);
    auto r = replay(s.tape, s.path, PolicyConfig{});
    std::size_t on_a = 0;
    for (const auto& a : r.actions) on_a += a.venue == "DARK-A";
    EXPECT_GT(on_a, r.actions.size() * 8 / 10);
    EXPECT_GT(r.reduction(), 0.0);
    EXPECT_EQ(r.cohorts.size(), 3u);
    EXPECT_EQ(r.all().orders, r.cohorts[1].orders + r.cohorts[2].orders);
}

TEST(Replay, ActionsAreMonotonePerOrderAndVenue) {
    Simulation s = sim("leaky", 4, 20'000.0);
    auto r = replay(s.tape, s.path, PolicyConfig{});
    std::map<std::pair<std::int64_t, std::string>, std::vector<const PolicyAction*>> seq;
    for (const auto& a : r.actions) seq[{*a.order, a.venue}].push_back(&a);
    for (const auto& [key, acts] : seq) {
        double floor = 0.0;
        for (std::size_t i = 0; i < acts.size(); ++i) {
            if (acts[i]->kind == PolicyAction::Kind::PauseVenue) {
                EXPECT_EQ(i + 1, acts.size());
            } else {
                EXPECT_GT(acts[i]->notional, floor);
                floor = acts[i]->notional;
            }
            if (i > 0) {
                EXPECT_GE(acts[i]->ts, acts[i - 1]->ts);
            }
        }
    }
}

TEST(Replay, TapeScopeAndDirectionFilter) {
    Simulation s = sim("leaky", 5, 10'000.0);
    PolicyConfig cfg;
    cfg.per_order = false;
    auto r = replay(s.tape, s.path, cfg);
    for (const auto& a : r.actions) EXPECT_FALSE(a.order);
    // Pausing is permanent at tape scope: at most one pause per venue.
    std::map<std::string, int> pauses;
    for (const auto& a : r.actions) pauses[a.venue] += a.kind == PolicyAction::Kind::PauseVenue;
    for (const auto& [v, n] : pauses) EXPECT_LE(n, 1);

    cfg.per_order = true;
    cfg.direction_filter = DirectionFilter::OppositeSideOnly;
    auto opp = replay(s.tape, s.path, cfg);
    cfg.direction_filter = DirectionFilter::SameSideOnly;
    auto same = replay(s.tape, s.path, cfg);
    // Leaks print on the fill's side.
    EXPECT_GT(same.actions.size(), opp.actions.size());
}

TEST(Replay, UntaggedFillsGroupBySideRuns) {
    Tape t;
    t.symbol = "XYZ";
    using testing::dark;
    using testing::lit;
    for (int i = 0; i < 40; ++i) t.events.push_back(lit(i * 1'000'000'000LL));
    for (int i = 0; i < 6; ++i) t.events.push_back(dark(i * 5'000'000'000LL + 500, i < 3 ? Side::Buy : Side::Sell));
    sort_tape(t);
    auto r = replay(t, path_from_tape(t), PolicyConfig{});
    ASSERT_EQ(r.orders.size(), 2u);
    EXPECT_EQ(r.orders[0].side, Side::Buy);
    EXPECT_EQ(r.orders[1].fills, 3u);
}

TEST(Replay, InsufficientFillsThrows) {
    Tape t;
    t.symbol = "XYZ";
    t.events = {testing::lit(0), testing::dark(10), testing::lit(20)};
    EXPECT_THROW(replay(t, path_from_tape(t), PolicyConfig{}), DomainError);
}

TEST(Replay, OutputFormats) {
    Simulation s = sim("leaky", 6, 5'000.0);
    auto r = replay(s.tape, s.path, PolicyConfig{});
    ASSERT_FALSE(r.actions.empty());
    std::ostringstream acts, tsv;
    write_actions(acts, r.actions);
    write_cohorts(tsv, r);
    std::istringstream in(acts.str());
    std::size_t n = 0;
    for_each_line(in, [&](const Line& line, std::size_t lineno) {
        EXPECT_EQ(get_string(line, "kind", lineno), "action");
        EXPECT_GT(get_number(line, "combined_p", lineno), 0.0);
        ++n;
    });
    EXPECT_EQ(n, r.actions.size());
    EXPECT_EQ(tsv.str().rfind("cohort\torders\t", 0), 0u);
    EXPECT_NE(tsv.str().find("\nflagged\t"), std::string::npos);
}

}  // namespace
}  // namespace darkscope
