#pragma once

// Versioned plain-text F_Z tables and the on-disk cache keyed by the
// sampler settings.
//
//   bwpart-fz 1
//   alpha 4
//   n_samples 1000000
//   seed 1
//   truncation_rel_tol 0.001
//   tail_rule fluctuation
//   fading_tag none
//   layout quantile_grid
//   points 4096
//   isa avx2
//   data
//   <one value per line, %.17g>

#include <filesystem>
#include <string>

#include "bwpart/stochgeo.hpp"

namespace bwpart::fz {

inline constexpr int kFormatVersion = 1;

struct TableKey {
  double alpha = 4.0;
  std::uint64_t n_samples = 1'000'000;
  std::uint64_t seed = 1;
  double truncation_rel_tol = 1e-3;
  TailRule tail_rule = TailRule::fluctuation;
  std::string fading_tag = "none";
  EmpiricalInterferenceCdf::Layout layout = EmpiricalInterferenceCdf::Layout::quantile_grid;
  bool operator==(const TableKey&) const = default;
};

std::string to_string(TailRule rule);
TailRule parse_tail_rule(const std::string& text);
std::string to_string(EmpiricalInterferenceCdf::Layout layout);
EmpiricalInterferenceCdf::Layout parse_layout(const std::string& text);

/// File name (no directory) that encodes the format version and the key.
std::string cache_file_name(const TableKey& key);

/// Text form of a table. `isa` records which kernel set produced it.
std::string serialize(const EmpiricalInterferenceCdf& cdf, TailRule rule, std::string_view isa);

struct LoadedTable {
  EmpiricalInterferenceCdf cdf;
  TailRule tail_rule;
  std::string isa;
};

/// Throws IoError on unreadable or malformed input.
LoadedTable parse(const std::string& text);
LoadedTable read_file(const std::filesystem::path& path);

/// Writes through a temporary file and a rename, guarded by `<path>.lock`
/// (created exclusively). Throws IoError when the lock is held.
void write_file(const std::filesystem::path& path, const EmpiricalInterferenceCdf& cdf,
                TailRule rule);

struct CacheResult {
  LoadedTable table;
  std::filesystem::path path;
  bool built = false;  ///< false when served from an existing file
  SamplingDiagnostics diagnostics;  ///< only meaningful when built
};

/// Returns the cached table for (alpha, plan, fading, layout) or simulates
/// and stores it. plan.replications is the sample count.
CacheResult load_or_build(const std::filesystem::path& cache_dir, double alpha,
                          const MonteCarloPlan& plan, FadingLaw fading,
                          EmpiricalInterferenceCdf::Layout layout);

/// Simulates without touching the disk.
EmpiricalInterferenceCdf build(double alpha, const MonteCarloPlan& plan, FadingLaw fading,
                               EmpiricalInterferenceCdf::Layout layout,
                               SamplingDiagnostics* diagnostics = nullptr);

}  // namespace bwpart::fz
