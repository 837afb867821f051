#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels/isa_tables.hpp"
#include "kernels/reduce.hpp"

namespace darkscope::kernels {

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
        default: return "scalar";
    }
}

std::vector<Isa> available_isas() {
    std::vector<Isa> isas{Isa::Scalar};
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2")) isas.push_back(Isa::Avx2);
#endif
#if defined(__aarch64__)
    isas.push_back(Isa::Neon);
#endif
    return isas;
}

Isa active_isa() {
    static const Isa chosen = [] {
        auto isas = available_isas();
        Isa best = isas.back();
        if (const char* env = std::getenv("DARKSCOPE_SIMD")) {
            for (Isa isa : isas) {
                if (to_string(isa) == env) return isa;
            }
        }
        return best;
    }();
    return chosen;
}

const KernelTable& table(Isa isa) {
    for (Isa a : available_isas()) {
        if (a != isa) continue;
        switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
            case Isa::Avx2: return detail::kAvx2Table;
#endif
#if defined(__aarch64__)
            case Isa::Neon: return detail::kNeonTable;
#endif
            default: return detail::kScalarTable;
        }
    }
    throw std::invalid_argument("instruction set '" + std::string(to_string(isa)) + "' not available");
}

void predictive_cdf(std::span<const double> delta, std::span<const std::uint32_t> count,
                    std::span<const double> mean, std::span<double> out) {
    if (count.size() != delta.size() || mean.size() != delta.size() || out.size() != delta.size()) {
        throw std::invalid_argument("predictive_cdf: length mismatch");
    }
    active().predictive_cdf(delta.data(), count.data(), mean.data(), out.data(), delta.size());
}

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

double sum_sq_dev(std::span<const double> x, double center) {
    return active().sum_sq_dev(x.data(), x.size(), center);
}

double predictive_cdf_one(double delta, std::uint32_t count, double mean) {
    return detail::predictive_cdf_scalar(delta, count, mean);
}

}  // namespace darkscope::kernels
