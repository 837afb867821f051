#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "darkscope/evidence.hpp"
#include "darkscope/slippage.hpp"
#include "darkscope/surprise.hpp"
#include "darkscope/tape.hpp"

namespace darkscope {

/// Which fills feed a ledger, by the side of the next lit print.
enum class DirectionFilter { Ignore, SameSideOnly, OppositeSideOnly };

std::string_view to_string(DirectionFilter f);
DirectionFilter parse_direction_filter(std::string_view s);

struct PolicyConfig {
    double alpha = 0.05;
    std::size_t k_min = 3;
    /// Minimum-fill ladder. The first rung is the floor in force before any
    /// trigger; each trigger climbs one rung.
    std::vector<double> min_fill_ladder{5'000.0, 25'000.0, 30'000.0};
    std::size_t pause_after = 2;  // escalations before the venue is paused
    DirectionFilter direction_filter = DirectionFilter::Ignore;
    /// Ledgers and ladders per (order, venue), reset when an order starts.
    /// When false they live for the whole tape, per venue.
    bool per_order = true;
    std::size_t k_max = 5;
    ScoreConfig score;
};

/// Throws DomainError on out-of-range fields.
void validate(const PolicyConfig& cfg);

/// Escalation state of one venue. Pauses are never lifted.
struct VenueState {
    std::size_t escalations = 0;
    bool paused = false;
    double min_fill = 0.0;
};

VenueState initial_state(const PolicyConfig& cfg);

struct PolicyAction {
    enum class Kind { None, RaiseMinFill, PauseVenue };
    Nanos ts = 0;
    std::string venue;
    Kind kind = Kind::None;
    double notional = 0.0;  // new floor for RaiseMinFill
    FisherResult trigger;
    std::optional<std::int64_t> order;  // set by per-order replay
};

std::string_view to_string(PolicyAction::Kind k);

/// None while the ledger holds fewer than k_min p-values or its combined p
/// is at least alpha; otherwise the next ladder rung, or a pause once
/// `pause_after` escalations have happened. Stamped with the ledger's last
/// update time.
PolicyAction decide(const EvidenceLedger& ledger, const VenueState& state, const PolicyConfig& cfg);

/// Applies an action to the venue state.
void apply(VenueState& state, const PolicyAction& action);

/// Arrival-price outcome of one order in both replay arms.
struct OrderOutcome {
    std::int64_t order = 0;
    Side side = Side::Unknown;
    std::size_t fills = 0;
    std::size_t fills_kept = 0;
    double slippage_off_bp = 0.0;
    std::optional<double> slippage_on_bp;  // absent when every fill was dropped
    bool flagged = false;                  // the policy acted during the order
};

struct CohortRow {
    std::string cohort;
    std::size_t orders = 0;
    double mean_off_bp = 0.0;
    double mean_abs_off_bp = 0.0;
    double stderr_abs_off_bp = 0.0;
    double mean_on_bp = 0.0;
    double mean_abs_on_bp = 0.0;
    double stderr_abs_on_bp = 0.0;
};

struct BacktestReport {
    std::vector<PolicyAction> actions;  // non-None only, in time order
    std::vector<OrderOutcome> orders;
    std::vector<CohortRow> cohorts;     // "all", "flagged", "unflagged"
    std::size_t decisions = 0;
    std::size_t fills = 0;
    std::size_t fills_dropped = 0;

    const CohortRow& all() const { return cohorts.front(); }
    double action_rate() const;
    /// 1 - mean|on| / mean|off| over the "all" cohort.
    double reduction() const;
    /// (mean|on| - mean|off|) in units of the unpaired standard error.
    double difference_z() const;
};

/// Cohort rows over orders that kept at least one fill.
std::vector<CohortRow> cohort_rows(const std::vector<OrderOutcome>& orders);

/// Replays the tape twice. Policy-off accepts every fill. Policy-on scores
/// the accepted fills as the stream unfolds, feeds their forward p-values to
/// the ledgers, acts on each decision, and drops fills below the venue's
/// floor or on a paused venue, together with any lit prints and path impacts
/// they caused. Fills are grouped into orders by their `order` tag, or by
/// runs of equal side when untagged. Throws DomainError when no venue has
/// k_min fills.
BacktestReport replay(const Tape& tape, const PricePath& path, const PolicyConfig& cfg);

/// Action lines (`kind = "action"`).
void write_actions(std::ostream& out, const std::vector<PolicyAction>& actions);

/// Tab-separated cohort table with a header row.
void write_cohorts(std::ostream& out, const BacktestReport& report);

}  // namespace darkscope
