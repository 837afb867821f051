#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "darkscope/tape.hpp"

namespace darkscope {

/// Rolling buffer of the most recent lit inter-arrival durations. Durations
/// are held in integer nanoseconds (floored at 1 ns) so the running mean is
/// exact up to the final division.
class DurationWindow {
public:
    explicit DurationWindow(std::size_t capacity = 10);

    /// Window primed with the given durations in seconds (oldest first).
    static DurationWindow from_durations(std::size_t capacity, std::span<const double> seconds);

    /// Records a lit print. The first print only sets the clock; each later
    /// one appends its duration since the previous print. Throws DomainError
    /// if `ts` precedes the previous print.
    void observe_lit(Nanos ts);

    /// Appends a duration directly, evicting the oldest beyond capacity.
    void push(Nanos duration);

    std::size_t capacity() const { return capacity_; }
    std::size_t count() const { return durations_.size(); }
    bool primed() const { return !durations_.empty(); }
    std::optional<Nanos> last_lit() const { return last_lit_; }

    /// Arithmetic mean duration in seconds; also the maximum-likelihood
    /// estimate of the mean time between prints.
    double mean() const;
    double intensity_hat() const { return mean(); }

    /// Durations in seconds, oldest first.
    std::vector<double> durations() const;

private:
    std::size_t capacity_;
    std::deque<Nanos> durations_;
    Nanos sum_ = 0;
    std::optional<Nanos> last_lit_;
};

/// Functional form of DurationWindow::observe_lit.
DurationWindow update_window(DurationWindow window, Nanos lit_ts);

inline constexpr double kPValueFloor = 1e-300;

/// 1 - exp(-delta / lambda). Throws DomainError unless lambda > 0, delta >= 0.
double exponential_cdf(double delta, double lambda);

/// Lower-tail probability of `delta` under the exponential with the window's
/// mean plugged in.
double plugin_pvalue(double delta, const DurationWindow& window);

/// Posterior predictive density of the next duration under the 1/lambda
/// prior: n^(n+1) m^n / (n m + delta)^(n+1), m the window mean.
double predictive_density(double delta, const DurationWindow& window);
double predictive_density(double delta, std::size_t n, double mean);

/// Its integral from 0: 1 - (n m)^n / (n m + delta)^n.
double predictive_cdf(double delta, const DurationWindow& window);
double predictive_cdf(double delta, std::size_t n, double mean);

/// Surprise p-value of a duration: the lower tail of the predictive law,
/// so quick prints give small values. Clamped to [1e-300, 1].
double fill_pvalue(double delta, const DurationWindow& window);
double fill_pvalue(double delta, std::size_t n, double mean);

struct SurpriseRecord {
    TapeEvent fill;
    std::size_t fill_index = 0;            // position on the scored tape
    std::optional<double> delta_fwd;       // seconds to the next lit print
    std::optional<double> delta_bwd;       // seconds since the previous one
    std::optional<double> p_fwd;
    std::optional<double> p_bwd;
    std::size_t n_used = 0;
    double mean_used = 0.0;
    Side next_lit_side = Side::Unknown;

    /// Next lit print on the fill's side, the other side, or unknown.
    enum class Direction { Same, Opposite, Unknown };
    Direction direction() const;
};

struct ScoreConfig {
    std::size_t window_n = 10;
    double horizon_mult = 50.0;  // forward lookahead in units of the window mean
};

/// Scores one dark fill at `fill_index` on a sorted tape against a frozen
/// window. The forward print must lie within `horizon` seconds of the fill,
/// otherwise the forward fields are absent. Throws DomainError if the window
/// is empty or the index is not a dark fill.
SurpriseRecord score_fill(const Tape& tape, std::size_t fill_index, const DurationWindow& window, double horizon);

/// Streaming scorer. Feed events in tape order; each dark fill's record is
/// released once its forward duration is resolved (next lit print) or
/// censored (horizon passed, or finish()). Records come out in fill order.
/// Fills that arrive before the window holds any duration are not scored.
class SurpriseScorer {
public:
    explicit SurpriseScorer(ScoreConfig cfg = {});

    /// `index` is the event's position on its tape, copied into the record.
    std::vector<SurpriseRecord> on_event(const TapeEvent& e, std::size_t index);
    std::vector<SurpriseRecord> finish();

    const DurationWindow& window() const { return window_; }
    std::size_t unscored() const { return unscored_; }

private:
    struct Pending {
        SurpriseRecord record;
        Nanos deadline;
    };

    ScoreConfig cfg_;
    DurationWindow window_;
    std::vector<Pending> pending_;
    std::size_t unscored_ = 0;
};

/// Scores every dark fill of a sorted tape, in fill order. Forward and
/// backward p-values are evaluated in one batch through the SIMD kernels;
/// results equal those of SurpriseScorer bit for bit.
std::vector<SurpriseRecord> score_tape(const Tape& tape, const ScoreConfig& cfg = {});

}  // namespace darkscope
