#include "darkscope/evidence.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace darkscope {

namespace {

void require_p(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("p-value outside (0, 1]");
}

}  // namespace

double fisher_statistic(std::span<const double> pvalues) {
    if (pvalues.empty()) throw DomainError("fisher_statistic: no p-values");
    double acc = 0.0;
    for (double p : pvalues) {
        require_p(p);
        acc += std::log(p);
    }
    return -2.0 * acc;
}

double chisq_survival_even(double x, unsigned dof) {
    if (dof == 0 || dof % 2 != 0) throw DomainError("chi-squared survival needs a positive even dof");
    if (!(x >= 0.0)) throw DomainError("chi-squared statistic must be non-negative");
    if (x == 0.0) return 1.0;

    const double h = 0.5 * x;
    const unsigned k = dof / 2;
    if (h < static_cast<double>(k)) {
        // Below the mean the lower tail e^-h sum_{j>=k} h^j / j! is small and
        // accurate, which keeps the survival monotone near 1.
        double term = 1.0, total = 1.0;
        for (unsigned m = 1; term > 1e-17 * total; ++m) {
            term *= h / static_cast<double>(k + m);
            total += term;
        }
        double lower = std::exp(k * std::log(h) - h - std::lgamma(k + 1.0)) * total;
        return lower >= 1.0 ? 0.0 : 1.0 - lower;
    }
    // Running terms h^j / j!, rescaled when large; the scale is carried in log
    // form and recombined with exp(-h) at the end.
    constexpr double kBig = 0x1.0p+900;
    constexpr double kLogBig = 900.0 * std::numbers::ln2;
    double term = 1.0;
    double total = 1.0;
    double log_scale = 0.0;
    for (unsigned j = 1; j < k; ++j) {
        term *= h / static_cast<double>(j);
        total += term;
        if (total > kBig) {
            term /= kBig;
            total /= kBig;
            log_scale += kLogBig;
        }
    }
    double s = std::exp(std::log(total) + log_scale - h);
    return s > 1.0 ? 1.0 : s;
}

FisherResult combine(std::span<const double> pvalues) {
    FisherResult r;
    r.k = pvalues.size();
    r.statistic = fisher_statistic(pvalues);
    if (r.k > std::numeric_limits<unsigned>::max() / 2) throw DomainError("too many p-values");
    r.combined_p = chisq_survival_even(r.statistic, static_cast<unsigned>(2 * r.k));
    return r;
}

EvidenceLedger::EvidenceLedger(std::string venue, std::size_t k_max) : venue_(std::move(venue)), k_max_(k_max) {
    if (k_max == 0) throw DomainError("ledger window must hold at least one p-value");
}

const FisherResult& EvidenceLedger::update(Nanos fill_ts, double p) {
    require_p(p);
    if (!history_.empty() && fill_ts < history_.back().ts) throw DomainError("ledger timestamp regression");
    buffer_.push_back(p);
    if (buffer_.size() > k_max_) buffer_.pop_front();
    std::vector<double> values(buffer_.begin(), buffer_.end());
    current_ = combine(values);
    history_.push_back({fill_ts, p, current_});
    return current_;
}

void EvidenceLedger::reset_buffer() {
    buffer_.clear();
    current_ = FisherResult{};
}

EvidenceLedger ledger_update(EvidenceLedger ledger, Nanos fill_ts, double p) {
    ledger.update(fill_ts, p);
    return ledger;
}

}  // namespace darkscope
