#include "darkscope/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "darkscope/line_format.hpp"

namespace darkscope {

std::string_view to_string(DirectionFilter f) {
    switch (f) {
        case DirectionFilter::Ignore: return "ignore";
        case DirectionFilter::SameSideOnly: return "same_side_only";
        case DirectionFilter::OppositeSideOnly: return "opposite_side_only";
    }
    return "ignore";
}

DirectionFilter parse_direction_filter(std::string_view s) {
    if (s == "ignore") return DirectionFilter::Ignore;
    if (s == "same_side_only") return DirectionFilter::SameSideOnly;
    if (s == "opposite_side_only") return DirectionFilter::OppositeSideOnly;
    throw DomainError("unknown direction filter '" + std::string(s) + "'");
}

std::string_view to_string(PolicyAction::Kind k) {
    switch (k) {
        case PolicyAction::Kind::None: return "none";
        case PolicyAction::Kind::RaiseMinFill: return "raise_min_fill";
        case PolicyAction::Kind::PauseVenue: return "pause_venue";
    }
    return "none";
}

void validate(const PolicyConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (cfg.k_min == 0) throw DomainError("k_min must be at least 1");
    if (cfg.k_max == 0) throw DomainError("k_max must be at least 1");
    if (cfg.min_fill_ladder.empty()) throw DomainError("min-fill ladder is empty");
    for (std::size_t i = 0; i < cfg.min_fill_ladder.size(); ++i) {
        if (!(cfg.min_fill_ladder[i] >= 0.0)) throw DomainError("min-fill ladder steps must be >= 0");
        if (i > 0 && !(cfg.min_fill_ladder[i] > cfg.min_fill_ladder[i - 1])) {
            throw DomainError("min-fill ladder must be strictly increasing");
        }
    }
    if (cfg.score.window_n == 0) throw DomainError("window size must be positive");
    if (!(cfg.score.horizon_mult > 0.0)) throw DomainError("horizon multiplier must be positive");
}

VenueState initial_state(const PolicyConfig& cfg) {
    VenueState s;
    s.min_fill = cfg.min_fill_ladder.front();
    return s;
}

PolicyAction decide(const EvidenceLedger& ledger, const VenueState& state, const PolicyConfig& cfg) {
    PolicyAction a;
    a.venue = ledger.venue();
    a.trigger = ledger.current();
    if (!ledger.history().empty()) a.ts = ledger.history().back().ts;
    if (state.paused || ledger.k() < cfg.k_min || !(a.trigger.combined_p < cfg.alpha)) return a;
    if (state.escalations >= cfg.pause_after) {
        a.kind = PolicyAction::Kind::PauseVenue;
        return a;
    }
    a.kind = PolicyAction::Kind::RaiseMinFill;
    std::size_t rung = std::min(state.escalations + 1, cfg.min_fill_ladder.size() - 1);
    a.notional = std::max(cfg.min_fill_ladder[rung], state.min_fill);
    return a;
}

void apply(VenueState& state, const PolicyAction& action) {
    switch (action.kind) {
        case PolicyAction::Kind::None: break;
        case PolicyAction::Kind::RaiseMinFill:
            ++state.escalations;
            state.min_fill = std::max(state.min_fill, action.notional);
            break;
        case PolicyAction::Kind::PauseVenue: state.paused = true; break;
    }
}

double BacktestReport::action_rate() const {
    return decisions ? static_cast<double>(actions.size()) / static_cast<double>(decisions) : 0.0;
}

double BacktestReport::reduction() const {
    const CohortRow& r = all();
    return r.mean_abs_off_bp > 0.0 ? 1.0 - r.mean_abs_on_bp / r.mean_abs_off_bp : 0.0;
}

double BacktestReport::difference_z() const {
    const CohortRow& r = all();
    double se = std::hypot(r.stderr_abs_off_bp, r.stderr_abs_on_bp);
    return se > 0.0 ? (r.mean_abs_on_bp - r.mean_abs_off_bp) / se : 0.0;
}

namespace {

struct Moments {
    double mean = 0.0;
    double mean_abs = 0.0;
    double stderr_abs = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    if (v.empty()) return m;
    double n = static_cast<double>(v.size());
    for (double x : v) {
        m.mean += x;
        m.mean_abs += std::abs(x);
    }
    m.mean /= n;
    m.mean_abs /= n;
    if (v.size() >= 2) {
        double ss = 0.0;
        for (double x : v) ss += (std::abs(x) - m.mean_abs) * (std::abs(x) - m.mean_abs);
        m.stderr_abs = std::sqrt(ss / (n - 1.0) / n);
    }
    return m;
}

// Fill id that caused an injected print, from truth "leak:<id>" / "sweep:<id>".
std::optional<std::int64_t> caused_by(const std::optional<std::string>& truth) {
    if (!truth) return std::nullopt;
    auto colon = truth->find(':');
    if (colon == std::string::npos) return std::nullopt;
    std::int64_t id = 0;
    const char* b = truth->data() + colon + 1;
    const char* e = truth->data() + truth->size();
    auto [ptr, ec] = std::from_chars(b, e, id);
    if (ec != std::errc() || ptr != e) return std::nullopt;
    return id;
}

struct Slot {
    EvidenceLedger ledger;
    VenueState state;
};

}  // namespace

std::vector<CohortRow> cohort_rows(const std::vector<OrderOutcome>& orders) {
    auto row = [&](std::string name, auto keep) {
        std::vector<double> off, on;
        for (const OrderOutcome& o : orders) {
            if (!o.slippage_on_bp || !keep(o)) continue;
            off.push_back(o.slippage_off_bp);
            on.push_back(*o.slippage_on_bp);
        }
        CohortRow r;
        r.cohort = std::move(name);
        r.orders = off.size();
        Moments a = moments(off), b = moments(on);
        r.mean_off_bp = a.mean;
        r.mean_abs_off_bp = a.mean_abs;
        r.stderr_abs_off_bp = a.stderr_abs;
        r.mean_on_bp = b.mean;
        r.mean_abs_on_bp = b.mean_abs;
        r.stderr_abs_on_bp = b.stderr_abs;
        return r;
    };
    return {row("all", [](const OrderOutcome&) { return true; }),
            row("flagged", [](const OrderOutcome& o) { return o.flagged; }),
            row("unflagged", [](const OrderOutcome& o) { return !o.flagged; })};
}

BacktestReport replay(const Tape& tape, const PricePath& path, const PolicyConfig& cfg) {
    validate(cfg);
    const auto& ev = tape.events;

    // Order membership of each dark fill.
    std::vector<std::int64_t> order_of(ev.size(), -1);
    std::map<std::string, std::size_t> per_venue;
    {
        std::int64_t run = -1;
        Side run_side = Side::Unknown;
        for (std::size_t i = 0; i < ev.size(); ++i) {
            const TapeEvent& e = ev[i];
            if (!e.is_dark()) continue;
            ++per_venue[e.venue.value_or("")];
            if (e.order) {
                order_of[i] = *e.order;
            } else {
                if (run < 0 || e.side != run_side) ++run;
                run_side = e.side;
                order_of[i] = run;
            }
        }
    }
    bool enough = std::any_of(per_venue.begin(), per_venue.end(), [&](const auto& kv) { return kv.second >= cfg.k_min; });
    if (!enough) throw DomainError("replay: no venue has k_min dark fills");

    BacktestReport report;
    SurpriseScorer scorer(cfg.score);
    std::map<std::pair<std::int64_t, std::string>, Slot> slots;
    std::set<std::int64_t> dropped_ids;
    std::vector<bool> kept(ev.size(), false);
    std::set<std::int64_t> flagged_orders;

    auto slot_for = [&](std::size_t i) -> Slot& {
        std::string venue = ev[i].venue.value_or("");
        std::int64_t key = cfg.per_order ? order_of[i] : 0;
        auto it = slots.find({key, venue});
        if (it == slots.end()) {
            it = slots.emplace(std::pair{key, venue}, Slot{EvidenceLedger(venue, cfg.k_max), initial_state(cfg)}).first;
        }
        return it->second;
    };

    auto handle = [&](const std::vector<SurpriseRecord>& records, Nanos now) {
        for (const SurpriseRecord& rec : records) {
            if (!rec.p_fwd) continue;
            auto dir = rec.direction();
            if (cfg.direction_filter == DirectionFilter::SameSideOnly && dir != SurpriseRecord::Direction::Same) continue;
            if (cfg.direction_filter == DirectionFilter::OppositeSideOnly && dir != SurpriseRecord::Direction::Opposite) {
                continue;
            }
            Slot& slot = slot_for(rec.fill_index);
            if (slot.state.paused) continue;
            slot.ledger.update(rec.fill.ts, *rec.p_fwd);
            ++report.decisions;
            PolicyAction a = decide(slot.ledger, slot.state, cfg);
            if (a.kind == PolicyAction::Kind::None) continue;
            a.ts = now;
            if (cfg.per_order) a.order = order_of[rec.fill_index];
            apply(slot.state, a);
            slot.ledger.reset_buffer();
            flagged_orders.insert(order_of[rec.fill_index]);
            report.actions.push_back(std::move(a));
        }
    };

    for (std::size_t i = 0; i < ev.size(); ++i) {
        const TapeEvent& e = ev[i];
        if (e.is_lit()) {
            if (auto cause = caused_by(e.truth); cause && dropped_ids.contains(*cause)) continue;
            kept[i] = true;
        } else {
            ++report.fills;
            Slot& slot = slot_for(i);
            if (slot.state.paused || e.size < slot.state.min_fill) {
                ++report.fills_dropped;
                if (e.id) dropped_ids.insert(*e.id);
                continue;
            }
            kept[i] = true;
        }
        handle(scorer.on_event(e, i), e.ts);
    }
    handle(scorer.finish(), ev.empty() ? 0 : ev.back().ts);

    PricePath on_path = path.without_impacts([&](std::int64_t id) { return dropped_ids.contains(id); });

    std::map<std::int64_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].is_dark()) members[order_of[i]].push_back(i);
    }
    for (const auto& [order, idx] : members) {
        OrderOutcome o;
        o.order = order;
        o.side = ev[idx.front()].side;
        o.fills = idx.size();
        o.flagged = flagged_orders.contains(order);
        if (o.side == Side::Unknown) continue;
        Nanos arrival = ev[idx.front()].ts;
        std::vector<double> px_off, sz_off, px_on, sz_on;
        for (std::size_t i : idx) {
            px_off.push_back(std::exp(path.log_mid_at(ev[i].ts)));
            sz_off.push_back(ev[i].size);
            if (kept[i]) {
                px_on.push_back(std::exp(on_path.log_mid_at(ev[i].ts)));
                sz_on.push_back(ev[i].size);
            }
        }
        o.fills_kept = px_on.size();
        o.slippage_off_bp = arrival_slippage_bp(o.side, px_off, sz_off, std::exp(path.log_mid_at(arrival)));
        if (!px_on.empty()) {
            o.slippage_on_bp = arrival_slippage_bp(o.side, px_on, sz_on, std::exp(on_path.log_mid_at(arrival)));
        }
        report.orders.push_back(o);
    }
    report.cohorts = cohort_rows(report.orders);
    return report;
}

void write_actions(std::ostream& out, const std::vector<PolicyAction>& actions) {
    for (const PolicyAction& a : actions) {
        Line line;
        line["kind"] = "action";
        line["ts"] = a.ts;
        line["venue"] = a.venue;
        line["action"] = std::string(to_string(a.kind));
        if (a.kind == PolicyAction::Kind::RaiseMinFill) line["notional"] = a.notional;
        if (a.order) line["order"] = *a.order;
        line["k"] = a.trigger.k;
        line["statistic"] = a.trigger.statistic;
        line["combined_p"] = a.trigger.combined_p;
        out << dump_line(line) << '\n';
    }
}

void write_cohorts(std::ostream& out, const BacktestReport& report) {
    out << "cohort\torders\tmean_off_bp\tmean_abs_off_bp\tstderr_abs_off_bp\tmean_on_bp\tmean_abs_on_bp\tstderr_abs_on_bp\n";
    for (const CohortRow& r : report.cohorts) {
        out << fmt::format("{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\n", r.cohort, r.orders, r.mean_off_bp,
                           r.mean_abs_off_bp, r.stderr_abs_off_bp, r.mean_on_bp, r.mean_abs_on_bp, r.stderr_abs_on_bp);
    }
    out << fmt::format("# decisions\t{}\n# actions\t{}\n# action_rate\t{:.6f}\n", report.decisions,
                       report.actions.size(), report.action_rate());
    out << fmt::format("# fills\t{}\n# fills_dropped\t{}\n# reduction\t{:.6f}\n# difference_z\t{:.6f}\n", report.fills,
                       report.fills_dropped, report.reduction(), report.difference_z());
}

}  // namespace darkscope
