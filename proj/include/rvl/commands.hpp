#pragma once

#include "rvl/config.hpp"

#include <iosfwd>
#include <string_view>

namespace rvl {

enum ExitCode : int {
    kExitOk = 0,
    kExitUnstable = 1,
    kExitValidation = 2,
    kExitComputation = 3,
    kExitIo = 4,
};

/// returns.csv, states.csv, simulate_report.txt
int cmd_simulate(const RunConfig& cfg, std::ostream& log);

/// stability_report.txt; returns kExitUnstable when rho(Q) >= 1.
int cmd_stability(const RunConfig& cfg, std::ostream& log);

/// draws.csv, posterior.txt, hist_<param>.csv, state_prob.csv and optionally states_rle.csv.
int cmd_fit(const RunConfig& cfg, std::ostream& log);

/// forecast.csv, metrics.txt, metrics_table.txt, high_vol_prob.csv
int cmd_forecast(const RunConfig& cfg, std::ostream& log);

/// backtest_report.txt, backtest_table.txt, exceptions_<rho>.csv
int cmd_backtest(const RunConfig& cfg, std::ostream& log);

/// Dispatches by name and maps exceptions to exit codes, printing the message to `err`.
int run_command(std::string_view name, const RunConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace rvl
