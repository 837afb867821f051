#include "darkscope/slippage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "darkscope/kernels.hpp"
#include "darkscope/line_format.hpp"

namespace darkscope {

PricePath::PricePath(std::vector<Sample> samples, std::vector<Drift> drifts, std::vector<Impact> impacts)
    : samples_(std::move(samples)), drifts_(std::move(drifts)), impacts_(std::move(impacts)) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i].log_mid)) throw DomainError("price path: non-finite log mid");
        if (i > 0 && samples_[i].ts <= samples_[i - 1].ts) throw DomainError("price path: timestamps must increase");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < drifts_.size(); ++i) {
        const Drift& d = drifts_[i];
        if (d.end < d.begin || !std::isfinite(d.bp_per_s)) throw DomainError("price path: bad drift segment");
        if (i > 0 && d.begin < drifts_[i - 1].end) throw DomainError("price path: overlapping drift segments");
        drift_cum_.push_back(acc);
        acc += d.bp_per_s * to_seconds(d.end - d.begin);
    }
    std::stable_sort(impacts_.begin(), impacts_.end(), [](const Impact& a, const Impact& b) { return a.ts < b.ts; });
    acc = 0.0;
    impact_cum_.push_back(0.0);
    for (const Impact& im : impacts_) {
        if (!(im.tau_s > 0.0) || !std::isfinite(im.bp)) throw DomainError("price path: bad impact");
        max_tau_ = std::max(max_tau_, im.tau_s);
        acc += im.bp;
        impact_cum_.push_back(acc);
    }
}

bool PricePath::covers(Nanos from, Nanos to) const {
    return !samples_.empty() && samples_.front().ts <= from && samples_.back().ts >= to;
}

double PricePath::drift_at(Nanos t) const {
    auto it = std::upper_bound(drifts_.begin(), drifts_.end(), t, [](Nanos v, const Drift& d) { return v < d.begin; });
    if (it == drifts_.begin()) return 0.0;
    std::size_t i = static_cast<std::size_t>(it - drifts_.begin()) - 1;
    const Drift& d = drifts_[i];
    return drift_cum_[i] + d.bp_per_s * to_seconds(std::min(t, d.end) - d.begin);
}

double PricePath::impact_at(Nanos t) const {
    if (impacts_.empty()) return 0.0;
    auto by_ts = [](const Impact& im, Nanos v) { return im.ts < v; };
    Nanos settled = t - from_seconds(max_tau_);
    // Impacts at or before `settled` have fully ramped in.
    auto full_end = std::lower_bound(impacts_.begin(), impacts_.end(), settled + 1, by_ts);
    auto live_end = std::lower_bound(impacts_.begin(), impacts_.end(), t, by_ts);
    double bp = impact_cum_[static_cast<std::size_t>(full_end - impacts_.begin())];
    for (auto it = full_end; it < live_end; ++it) {
        bp += it->bp * std::min(1.0, to_seconds(t - it->ts) / it->tau_s);
    }
    return bp;
}

double PricePath::log_mid_at(Nanos t) const {
    if (samples_.empty() || t < samples_.front().ts) throw DomainError("price path: time before first sample");
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t, [](Nanos v, const Sample& s) { return v < s.ts; });
    return std::prev(it)->log_mid + (drift_at(t) + impact_at(t)) / kBasisPoints;
}

PricePath PricePath::without_impacts(const std::function<bool(std::int64_t)>& drop) const {
    std::vector<Impact> kept;
    kept.reserve(impacts_.size());
    for (const Impact& im : impacts_) {
        if (!drop(im.fill_id)) kept.push_back(im);
    }
    return PricePath(samples_, drifts_, std::move(kept));
}

bool operator==(const PricePath& a, const PricePath& b) {
    auto eq_s = [](const PricePath::Sample& x, const PricePath::Sample& y) { return x.ts == y.ts && x.log_mid == y.log_mid; };
    auto eq_d = [](const PricePath::Drift& x, const PricePath::Drift& y) {
        return x.begin == y.begin && x.end == y.end && x.bp_per_s == y.bp_per_s;
    };
    auto eq_i = [](const PricePath::Impact& x, const PricePath::Impact& y) {
        return x.fill_id == y.fill_id && x.ts == y.ts && x.bp == y.bp && x.tau_s == y.tau_s;
    };
    return std::ranges::equal(a.samples_, b.samples_, eq_s) && std::ranges::equal(a.drifts_, b.drifts_, eq_d) &&
           std::ranges::equal(a.impacts_, b.impacts_, eq_i);
}

PricePath path_from_tape(const Tape& tape) {
    if (tape.empty()) throw DomainError("path_from_tape: empty tape");
    std::vector<PricePath::Sample> samples;
    for (const TapeEvent& e : tape.events) {
        double v = std::log(e.is_dark() ? e.mid.value_or(e.price) : e.price);
        if (!samples.empty() && samples.back().ts == e.ts) samples.back().log_mid = v;
        else samples.push_back({e.ts, v});
    }
    return PricePath(std::move(samples));
}

void write_path(std::ostream& out, const PricePath& path) {
    for (const auto& s : path.samples()) {
        Line line;
        line["kind"] = "mid";
        line["ts"] = s.ts;
        line["log_mid"] = s.log_mid;
        out << dump_line(line) << '\n';
    }
    for (const auto& d : path.drifts()) {
        Line line;
        line["kind"] = "drift";
        line["ts"] = d.begin;
        line["end"] = d.end;
        line["bp_per_s"] = d.bp_per_s;
        out << dump_line(line) << '\n';
    }
    for (const auto& im : path.impacts()) {
        Line line;
        line["kind"] = "impact";
        line["ts"] = im.ts;
        line["id"] = im.fill_id;
        line["bp"] = im.bp;
        line["tau"] = im.tau_s;
        out << dump_line(line) << '\n';
    }
}

PricePath parse_path(std::istream& in) {
    std::vector<PricePath::Sample> samples;
    std::vector<PricePath::Drift> drifts;
    std::vector<PricePath::Impact> impacts;
    for_each_line(in, [&](const Line& line, std::size_t lineno) {
        const std::string kind = line["kind"].get<std::string>();
        if (kind == "mid") {
            samples.push_back({get_integer(line, "ts", lineno), get_number(line, "log_mid", lineno)});
        } else if (kind == "drift") {
            drifts.push_back({get_integer(line, "ts", lineno), get_integer(line, "end", lineno),
                              get_number(line, "bp_per_s", lineno)});
        } else if (kind == "impact") {
            impacts.push_back({get_integer(line, "id", lineno), get_integer(line, "ts", lineno),
                               get_number(line, "bp", lineno), get_number(line, "tau", lineno)});
        } else {
            throw ParseError(lineno, "unexpected record kind '" + kind + "' in price path");
        }
    });
    try {
        return PricePath(std::move(samples), std::move(drifts), std::move(impacts));
    } catch (const DomainError& e) {
        throw ParseError(0, e.what());
    }
}

std::optional<double> post_fill_slippage(const TapeEvent& fill, const PricePath& path, const SlippageConfig& cfg) {
    if (!fill.is_dark()) throw DomainError("slippage is defined for dark fills only");
    if (fill.side == Side::Unknown) throw DomainError("slippage needs a fill side");
    if (!(cfg.tau > 0.0)) throw DomainError("slippage horizon must be positive");
    Nanos end = fill.ts + from_seconds(cfg.tau);
    if (!path.covers(fill.ts, end)) return std::nullopt;
    double start = fill.mid ? std::log(*fill.mid) : path.log_mid_at(fill.ts);
    return sign(fill.side) * (path.log_mid_at(end) - start) * kBasisPoints;
}

SlippageStats mean_slippage(std::span<const double> slippage_bp) {
    if (slippage_bp.size() < 2) throw DomainError("mean_slippage needs at least two uncensored fills");
    SlippageStats st;
    st.count = slippage_bp.size();
    double n = static_cast<double>(st.count);
    st.mean = kernels::sum(slippage_bp) / n;
    st.stddev = std::sqrt(kernels::sum_sq_dev(slippage_bp, st.mean) / (n - 1.0));
    if (st.stddev > 0.0) st.t_stat = st.mean * std::sqrt(n) / st.stddev;
    return st;
}

SlippageStats mean_slippage(std::span<const TapeEvent> fills, const PricePath& path, const SlippageConfig& cfg) {
    std::vector<double> values;
    std::size_t censored = 0;
    for (const TapeEvent& f : fills) {
        if (!f.is_dark()) continue;
        if (auto s = post_fill_slippage(f, path, cfg)) values.push_back(*s);
        else ++censored;
    }
    SlippageStats st = mean_slippage(values);
    st.censored = censored;
    return st;
}

double min_fills_bound(double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (mu == 0.0) return std::numeric_limits<double>::infinity();
    double ratio = sigma / mu;
    return ratio * ratio;
}

double arrival_slippage_bp(Side side, std::span<const double> prices, std::span<const double> sizes,
                           double arrival_mid) {
    if (prices.empty() || prices.size() != sizes.size()) throw DomainError("arrival slippage needs matched fills");
    if (!(arrival_mid > 0.0)) throw DomainError("arrival mid must be positive");
    if (side == Side::Unknown) throw DomainError("arrival slippage needs a side");
    double notional = 0.0, volume = 0.0;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !(sizes[i] > 0.0)) throw DomainError("fill price and size must be positive");
        notional += prices[i] * sizes[i];
        volume += sizes[i];
    }
    return sign(side) * std::log(notional / volume / arrival_mid) * kBasisPoints;
}

std::vector<BucketRow> bucket_report(std::span<const FillOutcome> fills, std::size_t buckets) {
    if (buckets == 0) throw DomainError("bucket count must be positive");
    std::vector<std::vector<double>> members(buckets);
    for (const FillOutcome& f : fills) {
        if (!f.p_fwd || !f.slippage_bp) continue;
        auto b = static_cast<std::size_t>(*f.p_fwd * static_cast<double>(buckets));
        members[std::min(b, buckets - 1)].push_back(*f.slippage_bp);
    }
    std::vector<BucketRow> rows(buckets);
    for (std::size_t b = 0; b < buckets; ++b) {
        BucketRow& row = rows[b];
        row.p_lo = static_cast<double>(b) / static_cast<double>(buckets);
        row.p_hi = static_cast<double>(b + 1) / static_cast<double>(buckets);
        row.n = members[b].size();
        if (row.n == 0) continue;
        double n = static_cast<double>(row.n);
        row.mean_bp = kernels::sum(members[b]) / n;
        if (row.n >= 2) row.stderr_bp = std::sqrt(kernels::sum_sq_dev(members[b], *row.mean_bp) / (n - 1.0) / n);
    }
    return rows;
}

std::vector<ThresholdRow> size_threshold_report(std::span<const FillOutcome> fills, std::span<const double> thresholds,
                                                 double alpha) {
    if (fills.empty()) throw DomainError("size_threshold_report: no fills");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    std::vector<ThresholdRow> rows;
    for (double s : thresholds) {
        ThresholdRow row;
        row.threshold = s;
        for (const FillOutcome& f : fills) {
            if (!f.p_fwd || f.size < s) continue;
            ++row.cohort;
            if (*f.p_fwd < alpha) ++row.signalling;
        }
        if (row.cohort > 0) row.share = static_cast<double>(row.signalling) / static_cast<double>(row.cohort);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace darkscope
