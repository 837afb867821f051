#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "darkscope/tape.hpp"

namespace darkscope {

inline constexpr double kBasisPoints = 1e4;

/// Log-mid price path. The observed part is a step function (samples carried
/// forward); simulated paths may add continuous drift segments and per-fill
/// impact ramps, which replay can strip out for counterfactual pricing.
class PricePath {
public:
    struct Sample {
        Nanos ts;
        double log_mid;
    };
    /// Signed drift accruing over [begin, end).
    struct Drift {
        Nanos begin;
        Nanos end;
        double bp_per_s;
    };
    /// Signed impact of fill `fill_id`, ramping linearly from 0 at `ts` to
    /// `bp` at ts + tau and persisting thereafter.
    struct Impact {
        std::int64_t fill_id;
        Nanos ts;
        double bp;
        double tau_s;
    };

    PricePath() = default;
    /// Throws DomainError unless sample timestamps strictly increase, values
    /// are finite, and drift segments are ordered and disjoint.
    PricePath(std::vector<Sample> samples, std::vector<Drift> drifts = {}, std::vector<Impact> impacts = {});

    const std::vector<Sample>& samples() const { return samples_; }
    const std::vector<Drift>& drifts() const { return drifts_; }
    const std::vector<Impact>& impacts() const { return impacts_; }

    bool empty() const { return samples_.empty(); }
    /// True when [from, to] lies within the sampled span.
    bool covers(Nanos from, Nanos to) const;

    /// Log mid at `t`: last sample at or before `t`, plus drift and impact
    /// accrued by `t`. Throws DomainError before the first sample.
    double log_mid_at(Nanos t) const;

    /// Same path with the impacts of the selected fills removed.
    PricePath without_impacts(const std::function<bool(std::int64_t)>& drop) const;

    friend bool operator==(const PricePath& a, const PricePath& b);

private:
    double drift_at(Nanos t) const;
    double impact_at(Nanos t) const;

    std::vector<Sample> samples_;
    std::vector<Drift> drifts_;
    std::vector<Impact> impacts_;     // sorted by ts
    std::vector<double> drift_cum_;   // bp accrued before each segment
    std::vector<double> impact_cum_;  // bp of impacts [0, i)
    double max_tau_ = 0.0;
};

/// Step path observed on a tape: log price of each lit print and log mid
/// (or price) of each dark fill. Throws DomainError on an empty tape.
PricePath path_from_tape(const Tape& tape);

/// Line records "mid", "drift", "impact".
void write_path(std::ostream& out, const PricePath& path);
PricePath parse_path(std::istream& in);

struct SlippageConfig {
    double tau = 5.0;  // seconds
};

/// Signed post-fill move eps * (p(t + tau) - p(t)) in bp; positive is adverse
/// to the filler. p(t) is taken from the fill's `mid` when present. Returns
/// nullopt when the path does not cover [t, t + tau]. Throws DomainError for
/// events that are not dark fills with a known side.
std::optional<double> post_fill_slippage(const TapeEvent& fill, const PricePath& path, const SlippageConfig& cfg);

struct SlippageStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::optional<double> t_stat;  // absent when stddev == 0
    std::size_t count = 0;
    std::size_t censored = 0;
    bool degenerate() const { return !t_stat; }
};

/// Sample mean, standard deviation and t = mean * sqrt(n) / std. Throws
/// DomainError with fewer than two values.
SlippageStats mean_slippage(std::span<const double> slippage_bp);

/// As above over the uncensored fills of `fills`.
SlippageStats mean_slippage(std::span<const TapeEvent> fills, const PricePath& path, const SlippageConfig& cfg);

/// (sigma / mu)^2, the number of fills before a t-test on mean slippage can
/// reach one standard error. Infinity when mu == 0; throws DomainError when
/// sigma <= 0.
double min_fills_bound(double mu, double sigma);

/// Signed arrival slippage in bp of a set of same-side fills: eps * log(vwap
/// / arrival_mid). Throws DomainError on empty input or non-positive values.
double arrival_slippage_bp(Side side, std::span<const double> prices, std::span<const double> sizes,
                           double arrival_mid);

/// What the reports need from one scored fill.
struct FillOutcome {
    std::optional<double> p_fwd;
    std::optional<double> slippage_bp;
    double size = 0.0;
};

struct BucketRow {
    double p_lo = 0.0;
    double p_hi = 0.0;
    std::size_t n = 0;
    std::optional<double> mean_bp;
    std::optional<double> stderr_bp;  // needs n >= 2
};

/// Mean slippage per equal-width p_fwd bucket over [0, 1]; the last bucket
/// is closed. Fills missing either field are skipped.
std::vector<BucketRow> bucket_report(std::span<const FillOutcome> fills, std::size_t buckets);

struct ThresholdRow {
    double threshold = 0.0;
    std::size_t cohort = 0;
    std::size_t signalling = 0;
    std::optional<double> share;  // absent for an empty cohort
};

/// For each threshold s, the share of fills with size >= s whose p_fwd is
/// below alpha. Fills without p_fwd are skipped. Throws DomainError when
/// `fills` is empty.
std::vector<ThresholdRow> size_threshold_report(std::span<const FillOutcome> fills, std::span<const double> thresholds,
                                                 double alpha = 0.05);

}  // namespace darkscope
