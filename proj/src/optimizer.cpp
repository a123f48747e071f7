#include "bwpart/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bwpart/errors.hpp"
#include "bwpart/kernels.hpp"
#include "bwpart/special.hpp"
#include "bwpart/stochgeo.hpp"

namespace bwpart {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kLog2e = std::numbers::log2e;

void require_alpha(double alpha) {
  if (!(alpha > 2.0) || !std::isfinite(alpha)) throw std::invalid_argument("pathloss alpha must be > 2");
}

// 1/(2^b - 1) - 1/(b Eb/N0)
double bracket(EbN0 eb_n0, double b) {
  const double inv = 1.0 / std::expm1(b * kLn2);
  return eb_n0.is_infinite() ? inv : inv - 1.0 / (b * eb_n0.linear());
}

}  // namespace

DensityObjective::DensityObjective(EbN0 eb_n0, double alpha, double kappa)
    : eb_n0_(eb_n0), alpha_(alpha), kappa_(kappa) {
  require_alpha(alpha);
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  capacity_ = awgn_spectral_efficiency(eb_n0).c_bps_hz;
}

double density_of_b(const DensityObjective& objective, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("spectral efficiency must be > 0");
  const double br = bracket(objective.eb_n0(), b);
  if (br <= 0.0) {
    if (b <= objective.capacity() * (1.0 + 1e-12)) return 0.0;
    throw InfeasibleError("spectral efficiency exceeds C(Eb/N0)");
  }
  return objective.kappa() * b * std::pow(br, 2.0 / objective.alpha());
}

double kappa_of(const LinkBudget& budget, double fz_quantile_at_eps) {
  return fz_quantile_at_eps / (std::numbers::pi * budget.distance_m * budget.distance_m) *
         (budget.bandwidth_hz / budget.rate_bps);
}

namespace {

struct LhsTerms {
  double positive;  // e b (2^b - 1)
  double t2;        // e (2/alpha) b^2 2^b ln2
  double t3;        // (1 - 2/alpha)(2^b - 1)^2
};

LhsTerms lhs_terms(double e, double alpha, double b) {
  const double delta = 2.0 / alpha;
  const double em1 = std::expm1(b * kLn2);
  return {e * b * em1, e * delta * b * b * (em1 + 1.0) * kLn2, (1.0 - delta) * em1 * em1};
}

}  // namespace

double fixed_point_lhs(EbN0 eb_n0, double alpha, double b) {
  if (eb_n0.is_infinite()) throw std::invalid_argument("fixed_point_lhs needs a finite Eb/N0");
  const auto t = lhs_terms(eb_n0.linear(), alpha, b);
  return t.positive - t.t2 - t.t3;
}

double fixed_point_residual(EbN0 eb_n0, double alpha, double b) {
  if (eb_n0.is_infinite()) return interference_limited_residual(alpha, b);
  const auto t = lhs_terms(eb_n0.linear(), alpha, b);
  return std::abs(t.positive - t.t2 - t.t3) / (t.positive + t.t3);
}

double solve_interference_limited(double alpha) {
  require_alpha(alpha);
  const double half = alpha / 2.0;
  return kLog2e * (half + lambert_w0(-half * std::exp(-half)));
}

double interference_limited_residual(double alpha, double b) {
  return std::abs(b - kLog2e * (alpha / 2.0) * (-std::expm1(-b * kLn2)));
}

FixedPointResult solve_fixed_point(EbN0 eb_n0, double alpha, FixedPointOptions options) {
  require_alpha(alpha);
  FixedPointResult result;
  if (eb_n0.is_infinite()) {
    result.b_star = solve_interference_limited(alpha);
    result.residual = interference_limited_residual(alpha, result.b_star);
  } else {
    const double c = awgn_spectral_efficiency(eb_n0).c_bps_hz;
    if (!(c > 0.0)) throw InfeasibleError("Eb/N0 at or below ln 2 (-1.59 dB): no feasible b");
    // The lhs is positive below the root and negative above it.
    double lo = std::min(1e-9, 0.25 * c);
    double hi = c - std::min(1e-9, 0.25 * c);
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi) break;
      if (fixed_point_lhs(eb_n0, alpha, mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    result.b_star = 0.5 * (lo + hi);
    result.residual = fixed_point_residual(eb_n0, alpha, result.b_star);
  }
  if (options.certify_step) {
    const auto scan = grid_oracle_argmax(DensityObjective(eb_n0, alpha), *options.certify_step);
    result.oracle_b = scan.b_hat;
    if (std::abs(scan.b_hat - result.b_star) > 2.0 * *options.certify_step)
      throw std::logic_error("fixed point disagrees with the grid oracle");
  }
  return result;
}

PowerLimitedApprox solve_power_limited(EbN0 eb_n0, double alpha) {
  require_alpha(alpha);
  if (eb_n0.is_infinite()) throw std::invalid_argument("wideband approximation needs a finite Eb/N0");
  const double c = awgn_spectral_efficiency(eb_n0).c_bps_hz;
  if (!(c > 0.0)) throw InfeasibleError("Eb/N0 at or below ln 2 (-1.59 dB): no feasible b");
  const double coeff = wideband_density_coefficient(alpha);
  return {(1.0 - 2.0 / alpha) * c, coeff * c, coeff, c};
}

double wideband_density_coefficient(double alpha) {
  const double d = 2.0 / alpha;
  return std::pow(1.0 - d, 1.0 - d) * std::pow(d, d) * std::pow(2.0, -d);
}

GridScan grid_oracle_argmax(const DensityObjective& objective, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be > 0");
  const double upper = objective.eb_n0().is_infinite() ? objective.alpha() * kLog2e
                                                      : objective.capacity() - step;
  GridScan scan;
  scan.first_b = step;
  scan.step = step;
  if (upper < step) throw InfeasibleError("feasible interval shorter than one grid step");
  const auto count = static_cast<std::size_t>(std::floor((upper - step) / step + 1e-9)) + 1;
  scan.values.resize(count);

  kernels::DensityGridArgs args;
  args.inv_eb_n0 = objective.eb_n0().is_infinite() ? 0.0 : 1.0 / objective.eb_n0().linear();
  args.exponent = 2.0 / objective.alpha();
  args.first_b = step;
  args.step = step;
  kernels::density_grid(kernels::active(), args, scan.values);

  const auto best = std::max_element(scan.values.begin(), scan.values.end());
  scan.index = static_cast<std::size_t>(best - scan.values.begin());
  scan.b_hat = step + static_cast<double>(scan.index) * step;
  scan.density = *best * objective.kappa();
  if (objective.kappa() != 1.0)
    for (auto& v : scan.values) v *= objective.kappa();
  return scan;
}

std::size_t difference_sign_changes(const std::vector<double>& values) {
  std::size_t changes = 0;
  int previous = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double diff = values[i] - values[i - 1];
    const int sign = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
    if (sign == 0) continue;
    if (previous != 0 && sign != previous) ++changes;
    previous = sign;
  }
  return changes;
}

CapacityGap apply_capacity_gap(EbN0 eb_n0, double gamma_linear, double alpha) {
  require_alpha(alpha);
  if (!(gamma_linear >= 1.0)) throw std::invalid_argument("capacity gap must be >= 1");
  const EbN0 effective =
      eb_n0.is_infinite() ? eb_n0 : EbN0::from_linear(eb_n0.linear() / gamma_linear);
  return {effective, std::pow(gamma_linear, -2.0 / alpha)};
}

int integer_partition_of_b(const LinkBudget& budget, double b_star) {
  if (!(b_star > 0.0)) throw std::invalid_argument("b* must be > 0");
  const DensityObjective objective(eb_n0_of(budget), budget.pathloss_alpha);
  const double ideal = b_star * budget.bandwidth_hz / budget.rate_bps;
  const int lo = std::max(1, static_cast<int>(std::floor(ideal)));
  const int hi = std::max(1, static_cast<int>(std::ceil(ideal)));

  auto value = [&](int n) {
    const double b = b_of_partition(budget, n);
    if (b > objective.capacity()) return -1.0;
    return density_of_b(objective, b);
  };
  const double v_lo = value(lo);
  const double v_hi = value(hi);
  if (v_lo < 0.0 && v_hi < 0.0)
    throw InfeasibleError("rate R exceeds W C(Eb/N0): no feasible partition");
  return v_hi > v_lo ? hi : lo;
}

double outage_of_b(const LinkBudget& budget, double lambda_total, double b,
                   const EmpiricalInterferenceCdf& cdf) {
  const DensityObjective objective(eb_n0_of(budget), budget.pathloss_alpha);
  const double dens = density_of_b(objective, b);
  if (lambda_total <= 0.0) return cdf.cdf(0.0);
  if (dens == 0.0) return 1.0;
  // lambda pi d^2 (R/W) (1/b) bracket^(-2/alpha) = lambda pi d^2 (R/W) / (density / kappa).
  const double arg = lambda_total * std::numbers::pi * budget.distance_m * budget.distance_m *
                     (budget.rate_bps / budget.bandwidth_hz) / dens;
  return cdf.cdf(arg);
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::interference_limited: return "interference_limited";
    case Regime::power_limited: return "power_limited";
    case Regime::general: return "general";
  }
  return "general";
}

Regime classify_regime(EbN0 eb_n0) {
  if (eb_n0.is_infinite() || eb_n0.db() >= 15.0) return Regime::interference_limited;
  // C(0 dB) = 1 up to the rounding of the root.
  if (awgn_spectral_efficiency(eb_n0).c_bps_hz <= 1.0 + 1e-12) return Regime::power_limited;
  return Regime::general;
}

PartitionSolution solve(const LinkBudget& budget, double fz_quantile_at_eps) {
  budget.validate();
  if (!(fz_quantile_at_eps > 0.0)) throw std::invalid_argument("F_Z quantile must be > 0");
  PartitionSolution s;
  s.eb_n0 = eb_n0_of(budget);
  s.alpha = budget.pathloss_alpha;
  const auto fp = solve_fixed_point(s.eb_n0, s.alpha);
  const DensityObjective unit(s.eb_n0, s.alpha);
  s.capacity = unit.capacity();
  s.b_star = fp.b_star;
  s.beta_star = beta_of_b(s.b_star);
  s.fixed_point_residual = fp.residual;
  s.density_constant = density_of_b(unit, s.b_star);
  s.n_star = integer_partition_of_b(budget, s.b_star);
  s.b_partition = b_of_partition(budget, s.n_star);
  s.beta_partition = beta_of_b(s.b_partition);
  s.density_constant_partition = density_of_b(unit, s.b_partition);
  s.kappa = kappa_of(budget, fz_quantile_at_eps);
  s.density_per_m2 = s.kappa * s.density_constant_partition;
  s.regime = classify_regime(s.eb_n0);
  s.closed_form_b = solve_interference_limited(s.alpha);
  if (!s.eb_n0.is_infinite()) s.wideband_b = solve_power_limited(s.eb_n0, s.alpha).b_star;
  return s;
}

PartitionSolution solve(const LinkBudget& budget, const EmpiricalInterferenceCdf& cdf) {
  if (std::abs(cdf.alpha() - budget.pathloss_alpha) > 1e-12)
    throw std::invalid_argument("F_Z table was built for a different path-loss exponent");
  return solve(budget, cdf.quantile(budget.outage_eps));
}

}  // namespace bwpart
