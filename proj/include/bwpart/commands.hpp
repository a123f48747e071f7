#pragma once

// The CLI workflows as library functions returning tables, plus the
// exception-to-exit-code mapping used by the executable.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "bwpart/config.hpp"

namespace bwpart {

/// Empty cells print as "" in CSV and null in JSON.
using Cell = std::variant<std::monostate, double, std::int64_t, bool, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  /// Index of a header column; throws std::out_of_range when absent.
  std::size_t column(const std::string& name) const;
};

void write_csv(std::ostream& out, const Table& table);
/// Array of row objects keyed by the header.
void write_json(std::ostream& out, const Table& table);

/// field,value report for one scenario.
Table cmd_solve(const RunConfig& config, std::ostream& log);
/// eb_n0_db,alpha,b_star,beta_db,density_constant,c_awgn,wideband_approx,status
Table cmd_sweep(const RunConfig& config, std::ostream& log);
/// eb_n0_db,n,b,analytic_total_density,mc_total_density,mc_outage_at_analytic,
/// mc_outage_stderr,agree_3sigma,status
Table cmd_simulate(const RunConfig& config, std::ostream& log);
/// Writes (or reuses) the cached table and reports it as field,value.
Table cmd_fz(const RunConfig& config, std::ostream& log);
/// eb_n0_db,alpha,n,ds_density,fdma_density,fdma_density_n1,status
Table cmd_compare_ds(const RunConfig& config, std::ostream& log);
/// scenario,eb_n0_db,n_opt,outage_min,outage_ci_lo,outage_ci_hi,n_fixed_point,
/// n_interference_limited
Table cmd_fading(const RunConfig& config, std::ostream& log);

enum ExitCode : int { kExitOk = 0, kExitInfeasible = 2, kExitIo = 3, kExitConfig = 4, kExitOther = 1 };

/// Runs `verb` and writes the table to config.output (stdout when the path
/// is empty). Errors go to `err`; returns the process exit code.
int run_command(const std::string& verb, const RunConfig& config, std::ostream& out,
                std::ostream& err);

}  // namespace bwpart
