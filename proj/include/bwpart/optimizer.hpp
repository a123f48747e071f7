#pragma once

// Optimal operating spectral efficiency b* (and partition N*) for a
// Poisson field of interferers.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "bwpart/params.hpp"

namespace bwpart {

class EmpiricalInterferenceCdf;

/// lambda_total(b) / kappa as a function of b, optionally scaled by kappa.
class DensityObjective {
 public:
  DensityObjective(EbN0 eb_n0, double alpha, double kappa = 1.0);

  EbN0 eb_n0() const { return eb_n0_; }
  double alpha() const { return alpha_; }
  double kappa() const { return kappa_; }
  /// Feasibility boundary C(Eb/N0); +inf when interference limited.
  double capacity() const { return capacity_; }

 private:
  EbN0 eb_n0_;
  double alpha_;
  double kappa_;
  double capacity_;
};

/// kappa * b * (1/(2^b - 1) - 1/(b Eb/N0))^(2/alpha). Exactly 0 at b = C,
/// InfeasibleError beyond it.
double density_of_b(const DensityObjective& objective, double b);

/// kappa = (F_Z^-1(eps) / (pi d^2)) * (W / R).
double kappa_of(const LinkBudget& budget, double fz_quantile_at_eps);

/// Stationarity condition whose unique root on (0, C) is b*:
/// e b (2^b-1) - e (2/alpha) b^2 2^b ln2 - (1 - 2/alpha)(2^b-1)^2.
double fixed_point_lhs(EbN0 eb_n0, double alpha, double b);

/// |lhs| divided by the magnitude of its two positive terms.
double fixed_point_residual(EbN0 eb_n0, double alpha, double b);

struct FixedPointResult {
  double b_star = 0.0;
  double residual = 0.0;
  std::optional<double> oracle_b;  ///< set when certification was requested
};

struct FixedPointOptions {
  /// Run grid_oracle_argmax at this step and throw std::logic_error if it
  /// disagrees with the root by more than two steps.
  std::optional<double> certify_step;
};

/// Bisection on (1e-9, C - 1e-9). The interference-limited sentinel
/// dispatches to the closed form.
FixedPointResult solve_fixed_point(EbN0 eb_n0, double alpha, FixedPointOptions options = {});

/// log2(e) * (alpha/2 + W0(-(alpha/2) exp(-alpha/2))).
double solve_interference_limited(double alpha);

/// |b - log2(e) (alpha/2) (1 - 2^-b)|.
double interference_limited_residual(double alpha, double b);

struct PowerLimitedApprox {
  double b_star;            ///< (1 - 2/alpha) C
  double density_constant;  ///< coefficient * C
  double coefficient;       ///< (1-d)^(1-d) d^d 2^-d with d = 2/alpha
  double capacity;
};

/// First-order wideband approximation, accurate up to O(b^2).
PowerLimitedApprox solve_power_limited(EbN0 eb_n0, double alpha);

double wideband_density_coefficient(double alpha);

struct GridScan {
  double b_hat = 0.0;
  double density = 0.0;
  std::size_t index = 0;  ///< b_hat = first_b + index * step
  double first_b = 0.0;
  double step = 0.0;
  std::vector<double> values;  ///< density at every grid point
};

/// Exhaustive scan of density_of_b over b = step, 2 step, ... up to
/// C - step (up to alpha * log2(e) when interference limited).
GridScan grid_oracle_argmax(const DensityObjective& objective, double step = 1e-4);

/// Number of sign changes of the discrete differences of `values`
/// (1 for a unimodal curve with interior peak). Zero differences are skipped.
std::size_t difference_sign_changes(const std::vector<double>& values);

struct CapacityGap {
  EbN0 effective;             ///< Eb/N0 / Gamma
  double density_multiplier;  ///< Gamma^(-2/alpha)
};

CapacityGap apply_capacity_gap(EbN0 eb_n0, double gamma_linear, double alpha);

/// Candidate partitions floor/ceil(b* W/R) (each at least 1); returns the one
/// with the larger density, the smaller on ties.
int integer_partition_of_b(const LinkBudget& budget, double b_star);

/// Outage at total density lambda_total when operating at spectral
/// efficiency b (the dual of density maximization).
double outage_of_b(const LinkBudget& budget, double lambda_total, double b,
                   const EmpiricalInterferenceCdf& cdf);

enum class Regime { interference_limited, power_limited, general };
std::string_view to_string(Regime regime);

/// Advisory label: >= 15 dB is interference limited, C <= 1 power limited.
Regime classify_regime(EbN0 eb_n0);

struct PartitionSolution {
  EbN0 eb_n0 = EbN0::infinite();
  double alpha = 0.0;
  double capacity = 0.0;            ///< C(Eb/N0), +inf when interference limited
  double b_star = 0.0;              ///< continuous optimum
  double beta_star = 0.0;           ///< 2^b* - 1
  int n_star = 1;                   ///< integer partition
  double b_partition = 0.0;         ///< N* R / W
  double beta_partition = 0.0;      ///< 2^(N* R/W) - 1
  double density_constant = 0.0;    ///< lambda(b*) / kappa
  double density_constant_partition = 0.0;  ///< lambda(N*) / kappa
  double kappa = 0.0;
  double density_per_m2 = 0.0;      ///< lambda_total(N*)
  Regime regime = Regime::general;
  double fixed_point_residual = 0.0;
  std::optional<double> closed_form_b;  ///< interference-limited optimum for this alpha
  std::optional<double> wideband_b;     ///< (1 - 2/alpha) C, finite Eb/N0 only
};

/// Full pipeline: Eb/N0 -> b* -> N* -> density with kappa from F_Z^-1(eps).
PartitionSolution solve(const LinkBudget& budget, double fz_quantile_at_eps);
PartitionSolution solve(const LinkBudget& budget, const EmpiricalInterferenceCdf& cdf);

}  // namespace bwpart
