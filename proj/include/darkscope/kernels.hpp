#pragma once

// Data-parallel inner loops with a scalar reference and SIMD variants.
//
// Every variant performs the same sequence of IEEE operations per element
// (no fused multiply-add, identical reduction tree), so results are
// bit-identical across instruction sets and the dispatch choice never shows
// up in outputs.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace darkscope::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

/// Instruction sets usable on this machine, Scalar first.
std::vector<Isa> available_isas();

/// Best available ISA, unless DARKSCOPE_SIMD=scalar|avx2|neon requests
/// another (ignored when unavailable). Resolved once.
Isa active_isa();

struct KernelTable {
    /// out[i] = 1 - (s / (s + delta[i]))^count[i] with s = count[i] * mean[i].
    void (*predictive_cdf)(const double* delta, const std::uint32_t* count, const double* mean, double* out,
                           std::size_t len);
    /// Pairwise sum.
    double (*sum)(const double* x, std::size_t len);
    /// Pairwise sum of (x[i] - center)^2.
    double (*sum_sq_dev)(const double* x, std::size_t len, double center);
};

/// Kernels for `isa`; throws std::invalid_argument if not available.
const KernelTable& table(Isa isa);

inline const KernelTable& active() { return table(active_isa()); }

// Convenience wrappers over the active table.
void predictive_cdf(std::span<const double> delta, std::span<const std::uint32_t> count,
                    std::span<const double> mean, std::span<double> out);
double sum(std::span<const double> x);
double sum_sq_dev(std::span<const double> x, double center);

/// Single-element evaluation of the predictive CDF (scalar path).
double predictive_cdf_one(double delta, std::uint32_t count, double mean);

}  // namespace darkscope::kernels
