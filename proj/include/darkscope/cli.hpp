#pragma once

#include <iosfwd>

namespace darkscope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (`argv[0]` is the program name). Commands:
/// simulate, score, backtest, power, report. Results without an --output
/// file go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace darkscope::cli
