#pragma once

// Direct-sequence comparison and the fading / random-distance outage model.

#include <vector>

#include "bwpart/params.hpp"
#include "bwpart/stochgeo.hpp"

namespace bwpart {

/// Density for DS spreading with factor N: threshold beta(N)/N, noise N0 W.
/// Throws InfeasibleError when the threshold reaches the interference-free SNR.
double ds_density(const LinkBudget& budget, int n_spreading, const EmpiricalInterferenceCdf& cdf);
double ds_density(const LinkBudget& budget, int n_spreading, double fz_quantile_at_eps);

struct DistanceLaw {
  enum class Kind { fixed, uniform };
  Kind kind = Kind::fixed;
  double lo = 0.0;  ///< uniform only
  double hi = 0.0;

  static DistanceLaw fixed() { return {}; }
  static DistanceLaw uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }

  /// "fixed" or "uniform(8,12)"; parse_distance_law() inverts it.
  std::string tag() const;
  bool operator==(const DistanceLaw&) const = default;
};

DistanceLaw parse_distance_law(const std::string& text);

struct FadingScenario {
  FadingLaw fading;
  DistanceLaw distance;
  /// distance_m is the fixed distance, and the nominal one for Eb/N0 when
  /// the distance is random.
  LinkBudget budget;

  void validate() const;
  std::string tag() const;  ///< "<fading>/<distance>"
  bool operator==(const FadingScenario&) const = default;
};

FadingScenario parse_fading_scenario(const std::string& tag, const LinkBudget& budget);

struct FadingOutage {
  double probability = 0.0;         ///< power_term + interference_term
  double power_term = 0.0;          ///< P(G <= g*)
  double interference_term = 0.0;   ///< P(interference outage, G > g*)
  std::size_t replications = 0;
  SamplingDiagnostics diagnostics;

  double standard_error() const;
};

/// Outage through the two-term decomposition: G = d^-alpha h0 against
/// g* = beta eta / rho, then the fading-weighted Z conditioned on G.
FadingOutage fading_outage(const FadingScenario& scenario, double lambda_total, int n_subbands,
                           const MonteCarloPlan& plan);

/// Same quantity by simulating the SINR directly in physical units, on an
/// independent random stream; cross-checks the decomposition.
OutageEstimate fading_outage_direct(const FadingScenario& scenario, double lambda_total,
                                    int n_subbands, const MonteCarloPlan& plan);

struct FadingSweep {
  int n_opt = 1;
  int n_min = 1;
  std::vector<FadingOutage> outages;  ///< outages[n - n_min]

  const FadingOutage& at(int n) const { return outages.at(static_cast<std::size_t>(n - n_min)); }
  /// 3-sigma binomial interval at N.
  std::pair<double, double> interval(int n) const;
};

/// Outage for every N in [n_min, n_max] with common random numbers; the
/// argmin breaks ties towards the smaller N.
FadingSweep fading_optimal_n(const FadingScenario& scenario, double lambda_total, int n_min,
                             int n_max, const MonteCarloPlan& plan);

}  // namespace bwpart
