#pragma once

// Poisson-field interference engine: samples the normalized interference
// Z = (sum_i |X_i|^-alpha)^(-2/alpha) of a planar PPP with intensity 1/pi,
// builds its empirical CDF, and evaluates outage and maximum density.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bwpart/params.hpp"

namespace bwpart {

/// How the far field beyond the last simulated interferer is handled.
enum class TailRule {
  /// Stop once the standard deviation of the neglected sum is below
  /// tol * current sum, then add the exact mean of the neglected sum.
  fluctuation,
  /// Stop once the mean of the neglected sum is below tol * current sum and
  /// drop it. Biased low by at most tol; expensive for alpha near 2.
  mean_bound,
};

struct MonteCarloPlan {
  std::uint64_t seed = 1;
  std::size_t replications = 100000;
  double truncation_rel_tol = 1e-3;
  std::size_t max_terms = 10'000'000;
  TailRule tail_rule = TailRule::fluctuation;
  /// Throw TruncationError when any replication hits max_terms; otherwise
  /// keep the compensated value and report it in the diagnostics.
  bool strict_truncation = true;
  unsigned threads = 1;  ///< 0 = hardware concurrency

  void validate() const;
  bool operator==(const MonteCarloPlan&) const = default;
};

/// Per-interferer fading power law, unit mean.
struct FadingLaw {
  enum class Kind { none, rayleigh, nakagami };
  Kind kind = Kind::none;
  double nakagami_m = 1.0;

  static FadingLaw none() { return {}; }
  static FadingLaw rayleigh() { return {Kind::rayleigh, 1.0}; }
  static FadingLaw nakagami(double m) { return {Kind::nakagami, m}; }

  void validate() const;
  /// "none", "rayleigh", "nakagami(5)"; parse_fading_law() inverts it.
  std::string tag() const;
  bool operator==(const FadingLaw&) const = default;
};

FadingLaw parse_fading_law(const std::string& text);

struct SamplingDiagnostics {
  std::size_t truncated = 0;  ///< replications that hit max_terms
  double mean_terms = 0.0;
  std::size_t max_terms_used = 0;
};

struct ZSamples {
  std::vector<double> values;   ///< in replication order
  std::vector<double> nearest;  ///< first squared distance, when requested
  SamplingDiagnostics diagnostics;
};

/// Draws plan.replications realizations of Z by walking the ordered squared
/// distances of the unit-rate radial process. Replication i depends only on
/// (plan.seed, i).
ZSamples sample_z(double alpha, const MonteCarloPlan& plan, FadingLaw fading = FadingLaw::none(),
                  bool record_nearest = false);

/// Rough term count a replication with unit sum needs under `plan`; used to
/// warn before slow runs (alpha close to 2).
double expected_terms_estimate(double alpha, const MonteCarloPlan& plan);

/// Empirical F_Z, either from raw samples or from a stored quantile grid.
/// quantile() is the type-7 order-statistic estimator and cdf() is its
/// piecewise-linear inverse.
class EmpiricalInterferenceCdf {
 public:
  enum class Layout { samples, quantile_grid };

  struct Metadata {
    double alpha = 4.0;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
    double truncation_rel_tol = 0.0;
    std::string fading_tag = "none";
    bool operator==(const Metadata&) const = default;
  };

  static constexpr std::size_t kMinSamples = 1000;
  static constexpr std::size_t kDefaultGridPoints = 4096;

  /// Sorts the samples; all must be positive. n_samples is set from the data.
  static EmpiricalInterferenceCdf from_samples(std::vector<double> samples, Metadata meta);
  /// grid[k] is the quantile at p = k / (grid.size() - 1).
  static EmpiricalInterferenceCdf from_quantile_grid(std::vector<double> grid, Metadata meta);

  /// Convenience: sample_z + from_samples. Throws like sample_z.
  static EmpiricalInterferenceCdf simulate(double alpha, const MonteCarloPlan& plan,
                                           FadingLaw fading = FadingLaw::none());

  double cdf(double z) const;
  /// p in (0, 1); throws InsufficientSamplesError below kMinSamples.
  double quantile(double p) const;
  /// Quantiles at p = k / (points - 1), k = 0..points-1.
  std::vector<double> quantile_grid(std::size_t points = kDefaultGridPoints) const;

  const Metadata& metadata() const { return meta_; }
  Layout layout() const { return layout_; }
  std::span<const double> points() const { return points_; }
  double alpha() const { return meta_.alpha; }

 private:
  EmpiricalInterferenceCdf(std::vector<double> points, Metadata meta, Layout layout);
  std::vector<double> points_;
  Metadata meta_;
  Layout layout_;
};

double fz_quantile(const EmpiricalInterferenceCdf& cdf, double p);

/// Outage of the boxed CDF form for one sub-band of an N-way partition:
/// beta = 2^(NR/W) - 1, eta = N0 W / N. Returns exactly 1 when beta is not
/// below the interference-free SNR.
double outage_probability(const LinkBudget& budget, double lambda_per_band, int n_subbands,
                          const EmpiricalInterferenceCdf& cdf);

struct DensityPair {
  double per_band;  ///< 1/m^2
  double total;     ///< N * per_band
};

/// Maximum attempted-transmission density meeting budget.outage_eps.
/// Throws InfeasibleError past the interference-free boundary; exactly at
/// the boundary both densities are 0.
DensityPair max_density(const LinkBudget& budget, int n_subbands, const EmpiricalInterferenceCdf& cdf);
DensityPair max_density(const LinkBudget& budget, int n_subbands, double fz_quantile_at_eps);

/// (1/F_Z^-1(eps)) * (W/N) * interferer-free area; equals W / lambda_total.
double bandwidth_area_product(const LinkBudget& budget, int n_subbands,
                              const EmpiricalInterferenceCdf& cdf);

/// Interferer-free area pi d^2 (1/beta - eta/(rho d^-alpha))^(-2/alpha).
double interferer_free_area(const LinkBudget& budget, int n_subbands);

struct OutageEstimate {
  double probability = 0.0;
  std::size_t outages = 0;
  std::size_t replications = 0;
  SamplingDiagnostics diagnostics;

  /// Binomial standard error of `probability`.
  double standard_error() const;
};

/// Direct simulation of the reference link: interferers on the reference
/// sub-band form a PPP of intensity lambda_total / N, distances are drawn in
/// metres and the SINR is compared against beta(N). Uses a stream derived
/// from plan.seed, so calls with the same plan share random numbers.
OutageEstimate end_to_end_outage_mc(const LinkBudget& budget, double lambda_total, int n_subbands,
                                    const MonteCarloPlan& plan);

/// Largest total density whose end-to-end Monte Carlo outage does not
/// exceed budget.outage_eps, found by bisection with common random numbers.
/// `hint` is a starting guess (e.g. the analytic density); rel_tol bounds the
/// bracket width.
double mc_max_total_density(const LinkBudget& budget, int n_subbands, const MonteCarloPlan& plan,
                            double hint, double rel_tol = 1e-4);

}  // namespace bwpart
