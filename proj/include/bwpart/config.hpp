#pragma once

// Run configuration: flat key=value text with one [section] per concern.
// Only keys ending in _db take decibels; everything else is linear SI.

#include <optional>
#include <string>
#include <vector>

#include "bwpart/fz_table.hpp"
#include "bwpart/params.hpp"
#include "bwpart/stochgeo.hpp"

namespace bwpart {

enum class OutputFormat { csv, json };

struct FzSettings {
  std::uint64_t samples = 1'000'000;
  /// Skips the table entirely when set; F_Z^-1(eps) is taken as given.
  std::optional<double> quantile;
  EmpiricalInterferenceCdf::Layout layout = EmpiricalInterferenceCdf::Layout::quantile_grid;
  std::string cache_dir = "fz-cache";
  bool operator==(const FzSettings&) const = default;
};

struct SweepSettings {
  std::vector<double> eb_n0_db{0, 3, 6, 9, 12, 15, 20, 30};
  std::vector<double> alpha{2.5, 3, 3.5, 4};
  bool operator==(const SweepSettings&) const = default;
};

struct SimulateSettings {
  std::vector<double> eb_n0_db{0, 5, 20, 30};
  int n_min = 1;
  int n_max = 40;
  /// Also bisect for the Monte Carlo density (slower); otherwise only the
  /// outage at the analytic density is simulated.
  bool calibrate = true;
  bool operator==(const SimulateSettings&) const = default;
};

struct CompareDsSettings {
  std::vector<double> eb_n0_db{std::numeric_limits<double>::infinity()};
  std::vector<double> alpha{3, 4};
  int n_min = 1;
  int n_max = 50;
  bool operator==(const CompareDsSettings&) const = default;
};

struct FadingSettings {
  std::vector<std::string> scenarios{"rayleigh/fixed", "nakagami(5)/fixed", "none/uniform(8,12)",
                                     "none/uniform(5,15)"};
  double lambda_total = 0.01 / 3.14159265358979323846;
  std::vector<double> eb_n0_db{5, 10, 15, 20, 25, 30, 35, 40};
  int n_min = 1;
  int n_max = 25;
  bool operator==(const FadingSettings&) const = default;
};

struct OutputSettings {
  std::string path;  ///< empty: standard output
  OutputFormat format = OutputFormat::csv;
  bool operator==(const OutputSettings&) const = default;
};

struct RunConfig {
  LinkBudget budget;
  /// When set, overrides budget.power_w (or zeroes N0 for +inf).
  std::optional<double> eb_n0_db;
  MonteCarloPlan montecarlo;
  FzSettings fz;
  SweepSettings sweep;
  SimulateSettings simulate;
  CompareDsSettings compare_ds;
  FadingSettings fading;
  OutputSettings output;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError with the offending line number.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Every field, in parse_config's format; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// budget with eb_n0_db applied.
LinkBudget effective_budget(const RunConfig& config);
/// budget with its Eb/N0 replaced by `db` (+inf gives N0 = 0).
LinkBudget budget_at_db(const LinkBudget& budget, double db);

std::string format_double(double v);

}  // namespace bwpart
