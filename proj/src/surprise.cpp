#include "darkscope/surprise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "darkscope/kernels.hpp"

namespace darkscope {

namespace {

void require_primed(std::size_t n) {
    if (n == 0) throw DomainError("duration window is empty");
    if (n > std::numeric_limits<std::int32_t>::max()) throw DomainError("duration window too large");
}

void require_duration(double delta) {
    if (!(delta >= 0.0)) throw DomainError("duration must be non-negative");
}

double clamp_p(double p) { return std::clamp(p, kPValueFloor, 1.0); }

}  // namespace

DurationWindow::DurationWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw DomainError("window capacity must be positive");
}

DurationWindow DurationWindow::from_durations(std::size_t capacity, std::span<const double> seconds) {
    DurationWindow w(capacity);
    for (double s : seconds) {
        require_duration(s);
        w.push(from_seconds(s));
    }
    return w;
}

void DurationWindow::observe_lit(Nanos ts) {
    if (last_lit_) {
        if (ts < *last_lit_) throw DomainError("lit print timestamps must be non-decreasing");
        push(ts - *last_lit_);
    }
    last_lit_ = ts;
}

void DurationWindow::push(Nanos duration) {
    if (duration < 0) throw DomainError("negative duration");
    duration = std::max<Nanos>(duration, 1);
    durations_.push_back(duration);
    sum_ += duration;
    if (durations_.size() > capacity_) {
        sum_ -= durations_.front();
        durations_.pop_front();
    }
}

double DurationWindow::mean() const {
    require_primed(count());
    return to_seconds(sum_) / static_cast<double>(count());
}

std::vector<double> DurationWindow::durations() const {
    std::vector<double> out;
    out.reserve(durations_.size());
    for (Nanos d : durations_) out.push_back(to_seconds(d));
    return out;
}

DurationWindow update_window(DurationWindow window, Nanos lit_ts) {
    window.observe_lit(lit_ts);
    return window;
}

double exponential_cdf(double delta, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("exponential scale must be positive");
    require_duration(delta);
    return -std::expm1(-delta / lambda);
}

double plugin_pvalue(double delta, const DurationWindow& window) {
    require_primed(window.count());
    return clamp_p(exponential_cdf(std::max(delta, kDurationFloorSeconds), window.intensity_hat()));
}

double predictive_density(double delta, std::size_t n, double mean) {
    require_primed(n);
    require_duration(delta);
    if (!(mean > 0.0)) throw DomainError("window mean must be positive");
    // n^(n+1) m^n / (n m + d)^(n+1) = (1 / m) * (n m / (n m + d))^(n+1)
    double s = static_cast<double>(n) * mean;
    return std::exp(static_cast<double>(n + 1) * std::log(s / (s + delta))) / mean;
}

double predictive_density(double delta, const DurationWindow& window) {
    return predictive_density(delta, window.count(), window.mean());
}

double predictive_cdf(double delta, std::size_t n, double mean) {
    require_primed(n);
    require_duration(delta);
    if (!(mean > 0.0)) throw DomainError("window mean must be positive");
    return kernels::predictive_cdf_one(delta, static_cast<std::uint32_t>(n), mean);
}

double predictive_cdf(double delta, const DurationWindow& window) {
    return predictive_cdf(delta, window.count(), window.mean());
}

double fill_pvalue(double delta, std::size_t n, double mean) {
    return clamp_p(predictive_cdf(std::max(delta, kDurationFloorSeconds), n, mean));
}

double fill_pvalue(double delta, const DurationWindow& window) {
    return fill_pvalue(delta, window.count(), window.mean());
}

SurpriseRecord::Direction SurpriseRecord::direction() const {
    if (next_lit_side == Side::Unknown || fill.side == Side::Unknown) return Direction::Unknown;
    return next_lit_side == fill.side ? Direction::Same : Direction::Opposite;
}

SurpriseRecord score_fill(const Tape& tape, std::size_t fill_index, const DurationWindow& window, double horizon) {
    if (fill_index >= tape.events.size() || !tape.events[fill_index].is_dark()) {
        throw DomainError("score_fill: index does not refer to a dark fill");
    }
    require_primed(window.count());
    const TapeEvent& fill = tape.events[fill_index];

    SurpriseRecord rec;
    rec.fill = fill;
    rec.fill_index = fill_index;
    rec.n_used = window.count();
    rec.mean_used = window.mean();

    for (std::size_t i = fill_index + 1; i < tape.events.size(); ++i) {
        const TapeEvent& e = tape.events[i];
        if (!e.is_lit()) continue;
        double d = std::max(to_seconds(e.ts - fill.ts), kDurationFloorSeconds);
        if (d <= horizon) {
            rec.delta_fwd = d;
            rec.p_fwd = fill_pvalue(d, window);
            rec.next_lit_side = e.side;
        }
        break;
    }
    for (std::size_t i = fill_index; i-- > 0;) {
        const TapeEvent& e = tape.events[i];
        if (!e.is_lit()) continue;
        double d = std::max(to_seconds(fill.ts - e.ts), kDurationFloorSeconds);
        rec.delta_bwd = d;
        rec.p_bwd = fill_pvalue(d, window);
        break;
    }
    return rec;
}

SurpriseScorer::SurpriseScorer(ScoreConfig cfg) : cfg_(cfg), window_(cfg.window_n) {
    if (!(cfg.horizon_mult > 0.0)) throw DomainError("horizon multiplier must be positive");
}

std::vector<SurpriseRecord> SurpriseScorer::on_event(const TapeEvent& e, std::size_t index) {
    std::vector<SurpriseRecord> out;
    if (e.is_lit()) {
        // Every pending fill is either resolved or censored by this print.
        for (Pending& p : pending_) {
            SurpriseRecord& rec = p.record;
            if (e.ts <= p.deadline) {
                double d = std::max(to_seconds(e.ts - rec.fill.ts), kDurationFloorSeconds);
                rec.delta_fwd = d;
                rec.p_fwd = fill_pvalue(d, rec.n_used, rec.mean_used);
                rec.next_lit_side = e.side;
            }
            out.push_back(std::move(rec));
        }
        pending_.clear();
        window_.observe_lit(e.ts);
        return out;
    }

    if (!window_.primed()) {
        ++unscored_;
        return out;
    }
    SurpriseRecord rec;
    rec.fill = e;
    rec.fill_index = index;
    rec.n_used = window_.count();
    rec.mean_used = window_.mean();
    double d = std::max(to_seconds(e.ts - *window_.last_lit()), kDurationFloorSeconds);
    rec.delta_bwd = d;
    rec.p_bwd = fill_pvalue(d, rec.n_used, rec.mean_used);
    Nanos deadline = e.ts + from_seconds(cfg_.horizon_mult * rec.mean_used);
    pending_.push_back({std::move(rec), deadline});
    return out;
}

std::vector<SurpriseRecord> SurpriseScorer::finish() {
    std::vector<SurpriseRecord> out;
    for (Pending& p : pending_) out.push_back(std::move(p.record));
    pending_.clear();
    return out;
}

std::vector<SurpriseRecord> score_tape(const Tape& tape, const ScoreConfig& cfg) {
    if (cfg.window_n == 0) throw DomainError("window size must be positive");
    if (!(cfg.horizon_mult > 0.0)) throw DomainError("horizon multiplier must be positive");

    // Single pass resolving durations; p-values are filled in afterwards.
    std::vector<SurpriseRecord> records;
    DurationWindow window(cfg.window_n);
    std::vector<std::size_t> open;  // indices into records awaiting a forward print
    std::vector<Nanos> deadline;
    for (std::size_t i = 0; i < tape.events.size(); ++i) {
        const TapeEvent& e = tape.events[i];
        if (e.is_lit()) {
            for (std::size_t j = 0; j < open.size(); ++j) {
                SurpriseRecord& rec = records[open[j]];
                if (e.ts <= deadline[j]) {
                    rec.delta_fwd = std::max(to_seconds(e.ts - rec.fill.ts), kDurationFloorSeconds);
                    rec.next_lit_side = e.side;
                }
            }
            open.clear();
            deadline.clear();
            window.observe_lit(e.ts);
            continue;
        }
        if (!window.primed()) continue;
        SurpriseRecord rec;
        rec.fill = e;
        rec.fill_index = i;
        rec.n_used = window.count();
        rec.mean_used = window.mean();
        rec.delta_bwd = std::max(to_seconds(e.ts - *window.last_lit()), kDurationFloorSeconds);
        open.push_back(records.size());
        deadline.push_back(e.ts + from_seconds(cfg.horizon_mult * rec.mean_used));
        records.push_back(std::move(rec));
    }

    // Forward and backward durations side by side: [fwd..., bwd...].
    std::vector<double> delta, mean;
    std::vector<std::uint32_t> count;
    std::vector<std::size_t> slot;
    delta.reserve(2 * records.size());
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t r = 0; r < records.size(); ++r) {
            const auto& d = pass == 0 ? records[r].delta_fwd : records[r].delta_bwd;
            if (!d) continue;
            delta.push_back(*d);
            count.push_back(static_cast<std::uint32_t>(records[r].n_used));
            mean.push_back(records[r].mean_used);
            slot.push_back(pass == 0 ? r : records.size() + r);
        }
    }
    std::vector<double> p(delta.size());
    kernels::predictive_cdf(delta, count, mean, p);
    for (std::size_t i = 0; i < slot.size(); ++i) {
        double v = clamp_p(p[i]);
        if (slot[i] < records.size()) records[slot[i]].p_fwd = v;
        else records[slot[i] - records.size()].p_bwd = v;
    }
    return records;
}

}  // namespace darkscope
