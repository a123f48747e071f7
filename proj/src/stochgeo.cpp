#include "bwpart/stochgeo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "bwpart/errors.hpp"
#include "bwpart/kernels.hpp"
#include "bwpart/parallel.hpp"
#include "bwpart/rng.hpp"
#include "radial.hpp"

namespace bwpart {

namespace {

constexpr double kPi = std::numbers::pi;

// Stream purposes for derive_seed.
constexpr std::uint64_t kPurposeTable = 1;
constexpr std::uint64_t kPurposeEndToEnd = 2;

void require_alpha(double alpha) {
  if (!(alpha > 2.0) || !std::isfinite(alpha)) throw std::invalid_argument("pathloss alpha must be > 2");
}

// Thread-safe accumulation of per-replication term counts.
class DiagnosticsAccumulator {
 public:
  void add(std::size_t terms, bool truncated) {
    total_.fetch_add(terms, std::memory_order_relaxed);
    if (truncated) truncated_.fetch_add(1, std::memory_order_relaxed);
    std::size_t prev = max_.load(std::memory_order_relaxed);
    while (prev < terms && !max_.compare_exchange_weak(prev, terms, std::memory_order_relaxed)) {
    }
  }

  SamplingDiagnostics finish(std::size_t replications) const {
    SamplingDiagnostics d;
    d.truncated = truncated_.load();
    d.max_terms_used = max_.load();
    d.mean_terms = replications ? static_cast<double>(total_.load()) / replications : 0.0;
    return d;
  }

 private:
  std::atomic<std::size_t> total_{0};
  std::atomic<std::size_t> truncated_{0};
  std::atomic<std::size_t> max_{0};
};

void check_truncation(const MonteCarloPlan& plan, const SamplingDiagnostics& d) {
  if (plan.strict_truncation && d.truncated > 0)
    throw TruncationError(std::to_string(d.truncated) + " replication(s) reached max_terms=" +
                              std::to_string(plan.max_terms) +
                              " before the far-field tolerance was met",
                          d.truncated);
}

// 1/beta - eta / (rho d^-alpha) for the reference sub-band of an N-way split.
double partition_bracket(const LinkBudget& budget, int n_subbands) {
  if (n_subbands < 1) throw std::invalid_argument("n_subbands must be >= 1");
  const double beta = beta_of_b(b_of_partition(budget, n_subbands));
  const double eta = budget.noise_density * budget.bandwidth_hz / n_subbands;
  return 1.0 / beta - eta / budget.received_power();
}

// Type-7 interpolation on sorted points at fractional index h in [0, n-1].
double interpolate(std::span<const double> x, double h) {
  const std::size_t n = x.size();
  if (h <= 0.0) return x.front();
  if (h >= static_cast<double>(n - 1)) return x.back();
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  return x[lo] + frac * (x[lo + 1] - x[lo]);
}

}  // namespace

void MonteCarloPlan::validate() const {
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (!(truncation_rel_tol > 0.0 && truncation_rel_tol < 1.0))
    throw std::invalid_argument("truncation_rel_tol must lie in (0, 1)");
  if (max_terms < detail::kRadialBlock)
    throw std::invalid_argument("max_terms must be >= " + std::to_string(detail::kRadialBlock));
}

void FadingLaw::validate() const {
  if (kind == Kind::nakagami && !(nakagami_m >= 0.5 && std::isfinite(nakagami_m)))
    throw std::invalid_argument("nakagami shape m must be >= 0.5");
}

std::string FadingLaw::tag() const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::rayleigh: return "rayleigh";
    case Kind::nakagami: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "nakagami(%.17g)", nakagami_m);
      return buf;
    }
  }
  return "none";
}

FadingLaw parse_fading_law(const std::string& text) {
  if (text == "none") return FadingLaw::none();
  if (text == "rayleigh") return FadingLaw::rayleigh();
  const std::string prefix = "nakagami(";
  if (text.size() > prefix.size() + 1 && text.compare(0, prefix.size(), prefix) == 0 &&
      text.back() == ')') {
    const std::string inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    std::size_t used = 0;
    double m = 0.0;
    try {
      m = std::stod(inner, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == inner.size() && used > 0) {
      FadingLaw law = FadingLaw::nakagami(m);
      law.validate();
      return law;
    }
  }
  throw std::invalid_argument("unknown fading law '" + text + "'");
}

ZSamples sample_z(double alpha, const MonteCarloPlan& plan, FadingLaw fading, bool record_nearest) {
  require_alpha(alpha);
  plan.validate();
  fading.validate();
  ZSamples out;
  out.values.resize(plan.replications);
  if (record_nearest) out.nearest.resize(plan.replications);
  const std::uint64_t key = derive_seed(plan.seed, kPurposeTable);
  const auto& kernels = kernels::active();
  const double inv_a = 2.0 / alpha;
  DiagnosticsAccumulator diag;
  parallel_for(plan.replications, plan.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(key, i);
      detail::FadingSampler weights(fading);
      detail::RadialWalker walker(alpha, 1.0, kernels, rng, weights);
      const auto sum = detail::radial_sum(walker, plan);
      out.values[i] = std::pow(sum.value, -inv_a);
      if (record_nearest) out.nearest[i] = walker.first_squared_distance();
      diag.add(sum.terms, sum.truncated);
    }
  });
  out.diagnostics = diag.finish(plan.replications);
  check_truncation(plan, out.diagnostics);
  return out;
}

double expected_terms_estimate(double alpha, const MonteCarloPlan& plan) {
  require_alpha(alpha);
  const double a = alpha / 2.0;
  const double tol = plan.truncation_rel_tol;
  // Squared distance at which a unit sum meets the stopping rule; the
  // unit-rate walk needs about that many terms.
  if (plan.tail_rule == TailRule::fluctuation)
    return std::pow(tol * tol * (2.0 * a - 1.0), 1.0 / (1.0 - 2.0 * a));
  return std::pow(tol * (a - 1.0), 1.0 / (1.0 - a));
}

EmpiricalInterferenceCdf::EmpiricalInterferenceCdf(std::vector<double> points, Metadata meta,
                                                   Layout layout)
    : points_(std::move(points)), meta_(std::move(meta)), layout_(layout) {}

EmpiricalInterferenceCdf EmpiricalInterferenceCdf::from_samples(std::vector<double> samples,
                                                                Metadata meta) {
  if (samples.empty()) throw InsufficientSamplesError("no samples");
  for (double z : samples)
    if (!(z > 0.0) || !std::isfinite(z)) throw std::invalid_argument("samples must be finite and > 0");
  std::sort(samples.begin(), samples.end());
  meta.n_samples = samples.size();
  return EmpiricalInterferenceCdf(std::move(samples), std::move(meta), Layout::samples);
}

EmpiricalInterferenceCdf EmpiricalInterferenceCdf::from_quantile_grid(std::vector<double> grid,
                                                                      Metadata meta) {
  if (grid.size() < 2) throw std::invalid_argument("quantile grid needs at least 2 points");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0) || !std::isfinite(grid[k]))
      throw std::invalid_argument("quantile grid values must be finite and > 0");
    if (k > 0 && grid[k] < grid[k - 1])
      throw std::invalid_argument("quantile grid must be nondecreasing");
  }
  return EmpiricalInterferenceCdf(std::move(grid), std::move(meta), Layout::quantile_grid);
}

EmpiricalInterferenceCdf EmpiricalInterferenceCdf::simulate(double alpha, const MonteCarloPlan& plan,
                                                            FadingLaw fading) {
  auto z = sample_z(alpha, plan, fading);
  Metadata meta;
  meta.alpha = alpha;
  meta.seed = plan.seed;
  meta.truncation_rel_tol = plan.truncation_rel_tol;
  meta.fading_tag = fading.tag();
  return from_samples(std::move(z.values), std::move(meta));
}

double EmpiricalInterferenceCdf::cdf(double z) const {
  const std::size_t n = points_.size();
  if (n == 1) return z >= points_[0] ? 1.0 : 0.0;
  if (z < points_.front()) return 0.0;
  if (z >= points_.back()) return 1.0;
  const auto it = std::upper_bound(points_.begin(), points_.end(), z);
  const auto k = static_cast<std::size_t>(it - points_.begin()) - 1;
  const double lo = points_[k];
  const double hi = points_[k + 1];
  const double frac = hi > lo ? (z - lo) / (hi - lo) : 0.0;
  return (static_cast<double>(k) + frac) / static_cast<double>(n - 1);
}

double EmpiricalInterferenceCdf::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  if (meta_.n_samples < kMinSamples)
    throw InsufficientSamplesError("F_Z quantiles need at least " + std::to_string(kMinSamples) +
                                   " samples, have " + std::to_string(meta_.n_samples));
  return interpolate(points_, p * static_cast<double>(points_.size() - 1));
}

std::vector<double> EmpiricalInterferenceCdf::quantile_grid(std::size_t points) const {
  if (points < 2) throw std::invalid_argument("quantile grid needs at least 2 points");
  std::vector<double> grid(points);
  const double scale = static_cast<double>(points_.size() - 1) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) grid[k] = interpolate(points_, static_cast<double>(k) * scale);
  return grid;
}

double fz_quantile(const EmpiricalInterferenceCdf& cdf, double p) { return cdf.quantile(p); }

double outage_probability(const LinkBudget& budget, double lambda_per_band, int n_subbands,
                          const EmpiricalInterferenceCdf& cdf) {
  budget.validate();
  if (std::abs(cdf.alpha() - budget.pathloss_alpha) > 1e-12 * budget.pathloss_alpha)
    throw std::invalid_argument("F_Z table alpha does not match the link budget");
  if (!(lambda_per_band >= 0.0)) throw std::invalid_argument("density must be >= 0");
  const double br = partition_bracket(budget, n_subbands);
  if (br <= 0.0) return 1.0;
  if (lambda_per_band == 0.0) return 0.0;
  const double d = budget.distance_m;
  return cdf.cdf(lambda_per_band * kPi * d * d * std::pow(br, -2.0 / budget.pathloss_alpha));
}

DensityPair max_density(const LinkBudget& budget, int n_subbands, double fz_quantile_at_eps) {
  budget.validate();
  if (!(fz_quantile_at_eps > 0.0)) throw std::invalid_argument("F_Z quantile must be > 0");
  const double br = partition_bracket(budget, n_subbands);
  if (br < 0.0)
    throw InfeasibleError("N=" + std::to_string(n_subbands) +
                          " needs an SINR threshold above the interference-free SNR");
  const double d = budget.distance_m;
  const double per_band =
      br == 0.0 ? 0.0 : fz_quantile_at_eps / (kPi * d * d) * std::pow(br, 2.0 / budget.pathloss_alpha);
  return {per_band, n_subbands * per_band};
}

DensityPair max_density(const LinkBudget& budget, int n_subbands, const EmpiricalInterferenceCdf& cdf) {
  return max_density(budget, n_subbands, cdf.quantile(budget.outage_eps));
}

double interferer_free_area(const LinkBudget& budget, int n_subbands) {
  budget.validate();
  const double br = partition_bracket(budget, n_subbands);
  if (br <= 0.0)
    throw InfeasibleError("N=" + std::to_string(n_subbands) +
                          " needs an SINR threshold at or above the interference-free SNR");
  const double d = budget.distance_m;
  return kPi * d * d * std::pow(br, -2.0 / budget.pathloss_alpha);
}

double bandwidth_area_product(const LinkBudget& budget, int n_subbands,
                              const EmpiricalInterferenceCdf& cdf) {
  const double q = cdf.quantile(budget.outage_eps);
  return (1.0 / q) * (budget.bandwidth_hz / n_subbands) * interferer_free_area(budget, n_subbands);
}

double OutageEstimate::standard_error() const {
  if (replications == 0) return 0.0;
  return std::sqrt(probability * (1.0 - probability) / static_cast<double>(replications));
}

OutageEstimate end_to_end_outage_mc(const LinkBudget& budget, double lambda_total, int n_subbands,
                                    const MonteCarloPlan& plan) {
  budget.validate();
  plan.validate();
  if (!(lambda_total >= 0.0) || !std::isfinite(lambda_total))
    throw std::invalid_argument("density must be finite and >= 0");
  if (n_subbands < 1) throw std::invalid_argument("n_subbands must be >= 1");

  const double beta = beta_of_b(b_of_partition(budget, n_subbands));
  const double eta = budget.noise_density * budget.bandwidth_hz / n_subbands;
  const double rho = budget.power_w;
  // Outage when rho * sum r^-alpha >= rho d^-alpha / beta - eta.
  const double threshold = (budget.received_power() / beta - eta) / rho;

  OutageEstimate est;
  est.replications = plan.replications;
  if (lambda_total == 0.0 || threshold <= 0.0) {
    est.outages = threshold <= 0.0 ? plan.replications : 0;
    est.probability = static_cast<double>(est.outages) / static_cast<double>(plan.replications);
    return est;
  }

  const double rate = kPi * lambda_total / n_subbands;  // squared distances per m^2
  const std::uint64_t key = derive_seed(plan.seed, kPurposeEndToEnd);
  const auto& kernels = kernels::active();
  std::atomic<std::size_t> outages{0};
  DiagnosticsAccumulator diag;
  parallel_for(plan.replications, plan.threads, [&](std::size_t begin, std::size_t end) {
    std::size_t local = 0;
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(key, i);
      detail::FadingSampler none(FadingLaw::none());
      detail::RadialWalker walker(budget.pathloss_alpha, rate, kernels, rng, none);
      const auto decision = detail::radial_exceeds(walker, plan, threshold);
      if (decision.exceeds) ++local;
      diag.add(decision.terms, decision.truncated);
    }
    outages.fetch_add(local, std::memory_order_relaxed);
  });
  est.diagnostics = diag.finish(plan.replications);
  check_truncation(plan, est.diagnostics);
  est.outages = outages.load();
  est.probability = static_cast<double>(est.outages) / static_cast<double>(plan.replications);
  return est;
}

double mc_max_total_density(const LinkBudget& budget, int n_subbands, const MonteCarloPlan& plan,
                            double hint, double rel_tol) {
  budget.validate();
  if (!(hint > 0.0) || !std::isfinite(hint)) throw std::invalid_argument("density hint must be > 0");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  const std::size_t allowed = static_cast<std::size_t>(
      std::floor(budget.outage_eps * static_cast<double>(plan.replications)));
  auto meets = [&](double lambda) {
    return end_to_end_outage_mc(budget, lambda, n_subbands, plan).outages <= allowed;
  };
  if (partition_bracket(budget, n_subbands) <= 0.0)
    throw InfeasibleError("N=" + std::to_string(n_subbands) + " is infeasible without interference");

  double lo = hint;
  double hi = hint;
  if (meets(hint)) {
    do {
      lo = hi;
      hi *= 2.0;
    } while (meets(hi));
  } else {
    do {
      hi = lo;
      lo *= 0.5;
      if (lo < hint * 1e-12) return 0.0;
    } while (!meets(lo));
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (meets(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace bwpart
