#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "darkscope/rng.hpp"
#include "darkscope/slippage.hpp"
#include "darkscope/tape.hpp"

namespace darkscope {

/// Mean time between lit prints, constant from `start` (seconds) until the
/// next segment.
struct IntensitySegment {
    double start = 0.0;
    double mean_duration = 1.0;
};

/// Delay between a dark fill and the lit print it triggers.
struct LatencyModel {
    enum class Kind { Exponential, Fixed };
    Kind kind = Kind::Exponential;
    /// Exponential: mean as a fraction of the local mean lit duration, with
    /// draws truncated to (0, lambda / 10]. Fixed: seconds.
    double value = 0.01;
};

struct VenueProfile {
    std::string venue;
    double leak_prob = 0.0;
    LatencyModel leak_latency;
    double size_log_mean = 9.392661928770137;  // log(12000)
    double size_log_sd = 0.8;
    /// Fills at or above this notional leak with `leak_prob_above_knee`.
    double size_leak_knee = std::numeric_limits<double>::infinity();
    double leak_prob_above_knee = 0.0;
    double sweep_prob = 0.0;   // lit print 1 ms after the fill, opposite side
    double latent_prob = 0.0;  // fill re-timed to 1 ms after the preceding lit print
};

struct PriceModel {
    double start_mid = 100.0;
    double sigma_per_trade = 0.25;  // bp per lit print
    double leak_impact = 0.0;       // bp, adverse, per leaked or swept fill
    double impact_horizon = 5.0;    // seconds over which impact ramps in
    double competing_drift = 0.0;   // bp/s, adverse to the active order
};

struct Scenario {
    std::string name = "custom";
    std::uint64_t seed = 0;
    std::string symbol = "SIM";
    double duration = 10'000.0;  // seconds
    std::vector<IntensitySegment> lit_intensity{{0.0, 0.25}};
    double dark_fill_rate = 0.1;    // fills per second per venue
    std::size_t fills_per_order = 40;  // consecutive fills sharing one side
    std::vector<VenueProfile> venues;
    PriceModel price;

    /// Mean lit duration in force at time `t` seconds.
    double mean_duration_at(double t) const;
};

/// Throws DomainError on any out-of-range field.
void validate(const Scenario& s);

/// Canonical scenarios: null, leaky, sweep, latent, competing, size_knee.
/// All share a 0.25 s mean lit duration, two venues (DARK-A, DARK-B) filling
/// at 0.1/s each in orders of 40 fills, lognormal sizes around 12,000 and
/// 0.25 bp per-print noise; they differ in what DARK-A (and for size_knee,
/// both venues) does:
///   null       nothing
///   leaky      DARK-A leaks with q = 0.5, latency Exp(lambda/100), 1.5 bp impact
///   sweep      DARK-A fills are swept with probability 0.5, 1.5 bp impact
///   latent     DARK-A fills land 1 ms after a lit print with probability 0.5
///   competing  no leakage; 0.1 bp/s drift against every active order
///   size_knee  both venues leak with q = 0.5 below 30,000 and 0.16 above
/// Throws DomainError for an unknown name.
Scenario preset(const std::string& name);

const std::vector<std::string>& preset_names();

/// Flat `key = value` scenario files (`#` starts a comment).
Scenario parse_scenario(std::istream& in);
void write_scenario(std::ostream& out, const Scenario& s);

/// Homogeneous or piecewise-constant Poisson lit prints over the scenario.
Tape gen_lit_tape(const Scenario& s);

/// Poisson dark fills per venue, merged in time order, grouped into orders of
/// `fills_per_order` with one random side per order. Fills carry `id`,
/// `order` and truth "clean".
Tape gen_dark_fills(const Scenario& s);

/// Applies latent re-timing, leakage and sweeps to the fills and returns the
/// merged tape. Injected prints carry truth "leak:<id>" or "sweep:<id>";
/// affected fills list their tags ("latent", "leak", "sweep"). With every
/// probability zero the result equals merge_streams(lit, dark).
Tape inject_leakage(const Tape& lit, const Tape& dark, const Scenario& s);

/// Log-mid random walk stepping at each lit print, plus an impact ramp for
/// every leaked or swept fill and competing drift over each order's span.
/// Sampled from time 0 to `end` (defaults to the last event).
PricePath gen_price_path(const Tape& merged, const Scenario& s, std::uint64_t seed, Nanos end = -1);

/// Sets every event's price (and dark fills' mid) from the path.
void attach_prices(Tape& tape, const PricePath& path);

struct Simulation {
    Tape tape;
    PricePath path;
};

/// The full pipeline: lit tape, fills, leakage, price path, prices.
Simulation simulate(const Scenario& s);

/// Mean-t crossing for detecting slippage with a t-test: over `seeds`
/// simulated fill sequences with per-fill drift `mu` and noise `sigma` (bp),
/// the first fill count (on a grid of `step`) at which the across-seed mean
/// t-statistic reaches `t_target`. Zero if never reached within `max_fills`.
struct PowerCrossing {
    std::size_t crossing = 0;
    std::vector<std::size_t> grid;
    std::vector<double> mean_t;
};
PowerCrossing empirical_power_crossing(double mu, double sigma, std::size_t seeds, std::uint64_t seed,
                                       double t_target, std::size_t max_fills, std::size_t step = 16);

}  // namespace darkscope
