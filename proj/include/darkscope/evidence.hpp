#pragma once

#include <deque>
#include <span>
#include <string>
#include <vector>

#include "darkscope/types.hpp"

namespace darkscope {

struct FisherResult {
    std::size_t k = 0;
    double statistic = 0.0;   // -2 * sum(log p)
    double combined_p = 1.0;  // chi-squared (2k dof) survival at the statistic
};

/// -2 * sum(log p). Throws DomainError on an empty sequence or p outside (0, 1].
double fisher_statistic(std::span<const double> pvalues);

/// Survival function of the chi-squared law with even `dof` = 2k:
/// exp(-x/2) * sum_{j<k} (x/2)^j / j!. Throws DomainError for odd or
/// non-positive dof, or negative x.
double chisq_survival_even(double x, unsigned dof);

/// Fisher's combination of independent p-values.
FisherResult combine(std::span<const double> pvalues);

/// Rolling Fisher combination over the most recent `k_max` p-values of one
/// venue, with a full update history.
class EvidenceLedger {
public:
    struct Entry {
        Nanos ts;
        double p;
        FisherResult result;
    };

    explicit EvidenceLedger(std::string venue, std::size_t k_max = 5);

    /// Adds a p-value and recombines. Throws DomainError on a timestamp
    /// older than the last update or p outside (0, 1].
    const FisherResult& update(Nanos fill_ts, double p);

    /// Clears the rolling buffer so the next decision rests on fresh fills.
    /// History is kept.
    void reset_buffer();

    const std::string& venue() const { return venue_; }
    std::size_t k_max() const { return k_max_; }
    std::size_t k() const { return buffer_.size(); }
    const std::deque<double>& buffer() const { return buffer_; }

    /// Result over the current buffer; k = 0 and combined_p = 1 when empty.
    const FisherResult& current() const { return current_; }
    const std::vector<Entry>& history() const { return history_; }

private:
    std::string venue_;
    std::size_t k_max_;
    std::deque<double> buffer_;
    FisherResult current_;
    std::vector<Entry> history_;
};

/// Functional form of EvidenceLedger::update.
EvidenceLedger ledger_update(EvidenceLedger ledger, Nanos fill_ts, double p);

}  // namespace darkscope
