#include "bwpart/extensions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
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

constexpr std::uint64_t kPurposeFading = 3;
constexpr std::uint64_t kPurposeFadingDirect = 4;

// Signal-side draws for one replication: distance first, then h0.
double draw_gain(const FadingScenario& scenario, CounterRng& rng, detail::FadingSampler& fading) {
  double d = scenario.budget.distance_m;
  if (scenario.distance.kind == DistanceLaw::Kind::uniform)
    d = scenario.distance.lo + (scenario.distance.hi - scenario.distance.lo) * rng.uniform_pos();
  const double h0 = fading.draw(rng);
  return std::pow(d, -scenario.budget.pathloss_alpha) * h0;
}

struct PartitionTerms {
  double beta;
  double eta_over_rho;
};

PartitionTerms partition_terms(const LinkBudget& budget, int n) {
  if (n < 1) throw std::invalid_argument("n_subbands must be >= 1");
  const double beta = beta_of_b(b_of_partition(budget, n));
  const double eta = budget.noise_density * budget.bandwidth_hz / n;
  return {beta, eta / budget.power_w};
}

// Per-replication G and unit-process weighted interference sum, shared by
// every N of a sweep.
struct FadingDraws {
  std::vector<double> gain;
  std::vector<double> unit_sum;
  SamplingDiagnostics diagnostics;
};

FadingDraws draw_fading(const FadingScenario& scenario, const MonteCarloPlan& plan) {
  scenario.validate();
  plan.validate();
  FadingDraws draws;
  draws.gain.resize(plan.replications);
  draws.unit_sum.resize(plan.replications);
  const std::uint64_t key = derive_seed(plan.seed, kPurposeFading);
  const auto& kernels = kernels::active();
  std::atomic<std::size_t> total_terms{0};
  std::atomic<std::size_t> truncated{0};
  std::atomic<std::size_t> max_terms{0};
  parallel_for(plan.replications, plan.threads, [&](std::size_t begin, std::size_t end) {
    std::size_t local_total = 0;
    std::size_t local_trunc = 0;
    std::size_t local_max = 0;
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(key, i);
      detail::FadingSampler fading(scenario.fading);
      draws.gain[i] = draw_gain(scenario, rng, fading);
      detail::RadialWalker walker(scenario.budget.pathloss_alpha, 1.0, kernels, rng, fading);
      const auto sum = detail::radial_sum(walker, plan);
      draws.unit_sum[i] = sum.value;
      local_total += sum.terms;
      local_max = std::max(local_max, sum.terms);
      if (sum.truncated) ++local_trunc;
    }
    total_terms.fetch_add(local_total);
    truncated.fetch_add(local_trunc);
    std::size_t prev = max_terms.load();
    while (prev < local_max && !max_terms.compare_exchange_weak(prev, local_max)) {
    }
  });
  draws.diagnostics.truncated = truncated.load();
  draws.diagnostics.max_terms_used = max_terms.load();
  draws.diagnostics.mean_terms =
      static_cast<double>(total_terms.load()) / static_cast<double>(plan.replications);
  if (plan.strict_truncation && draws.diagnostics.truncated > 0)
    throw TruncationError(std::to_string(draws.diagnostics.truncated) +
                              " replication(s) reached max_terms before the far-field tolerance",
                          draws.diagnostics.truncated);
  return draws;
}

FadingOutage evaluate(const FadingScenario& scenario, const FadingDraws& draws, double lambda_total,
                      int n) {
  const auto t = partition_terms(scenario.budget, n);
  const double g_star = t.beta * t.eta_over_rho;
  // Physical interference sum = (pi lambda')^(alpha/2) * unit sum.
  const double scale =
      std::pow(kPi * lambda_total / n, scenario.budget.pathloss_alpha / 2.0);
  std::size_t power = 0;
  std::size_t interference = 0;
  for (std::size_t i = 0; i < draws.gain.size(); ++i) {
    const double g = draws.gain[i];
    if (g <= g_star) {
      ++power;
    } else if (scale * draws.unit_sum[i] >= g / t.beta - t.eta_over_rho) {
      ++interference;
    }
  }
  FadingOutage out;
  out.replications = draws.gain.size();
  const double reps = static_cast<double>(out.replications);
  out.power_term = static_cast<double>(power) / reps;
  out.interference_term = static_cast<double>(interference) / reps;
  out.probability = static_cast<double>(power + interference) / reps;
  out.diagnostics = draws.diagnostics;
  return out;
}

void require_density(double lambda_total) {
  if (!(lambda_total >= 0.0) || !std::isfinite(lambda_total))
    throw std::invalid_argument("density must be finite and >= 0");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double ds_density(const LinkBudget& budget, int n_spreading, double fz_quantile_at_eps) {
  budget.validate();
  if (n_spreading < 1) throw std::invalid_argument("spreading factor must be >= 1");
  if (!(fz_quantile_at_eps > 0.0)) throw std::invalid_argument("F_Z quantile must be > 0");
  const double threshold = beta_of_b(b_of_partition(budget, n_spreading)) / n_spreading;
  const double eta = budget.noise_density * budget.bandwidth_hz;
  const double br = 1.0 / threshold - eta / budget.received_power();
  if (br < 0.0)
    throw InfeasibleError("spreading factor " + std::to_string(n_spreading) +
                          " needs a threshold above the interference-free SNR");
  if (br == 0.0) return 0.0;
  const double d = budget.distance_m;
  return fz_quantile_at_eps / (kPi * d * d) * std::pow(br, 2.0 / budget.pathloss_alpha);
}

double ds_density(const LinkBudget& budget, int n_spreading, const EmpiricalInterferenceCdf& cdf) {
  return ds_density(budget, n_spreading, cdf.quantile(budget.outage_eps));
}

std::string DistanceLaw::tag() const {
  if (kind == Kind::fixed) return "fixed";
  return "uniform(" + format_double(lo) + "," + format_double(hi) + ")";
}

DistanceLaw parse_distance_law(const std::string& text) {
  if (text == "fixed") return DistanceLaw::fixed();
  const std::string prefix = "uniform(";
  if (text.size() > prefix.size() + 1 && text.compare(0, prefix.size(), prefix) == 0 &&
      text.back() == ')') {
    const std::string inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    const auto comma = inner.find(',');
    if (comma != std::string::npos) {
      try {
        std::size_t used_lo = 0;
        std::size_t used_hi = 0;
        const std::string a = inner.substr(0, comma);
        const std::string b = inner.substr(comma + 1);
        const double lo = std::stod(a, &used_lo);
        const double hi = std::stod(b, &used_hi);
        if (used_lo == a.size() && used_hi == b.size()) return DistanceLaw::uniform(lo, hi);
      } catch (const std::exception&) {
      }
    }
  }
  throw std::invalid_argument("unknown distance law '" + text + "'");
}

void FadingScenario::validate() const {
  budget.validate();
  fading.validate();
  if (distance.kind == DistanceLaw::Kind::uniform &&
      !(distance.lo > 0.0 && distance.hi >= distance.lo && std::isfinite(distance.hi)))
    throw std::invalid_argument("uniform distance law needs 0 < lo <= hi");
}

std::string FadingScenario::tag() const { return fading.tag() + "/" + distance.tag(); }

FadingScenario parse_fading_scenario(const std::string& tag, const LinkBudget& budget) {
  FadingScenario s;
  s.budget = budget;
  const auto slash = tag.find('/');
  s.fading = parse_fading_law(tag.substr(0, slash));
  s.distance = slash == std::string::npos ? DistanceLaw::fixed()
                                          : parse_distance_law(tag.substr(slash + 1));
  s.validate();
  return s;
}

double FadingOutage::standard_error() const {
  if (replications == 0) return 0.0;
  return std::sqrt(probability * (1.0 - probability) / static_cast<double>(replications));
}

FadingOutage fading_outage(const FadingScenario& scenario, double lambda_total, int n_subbands,
                           const MonteCarloPlan& plan) {
  require_density(lambda_total);
  partition_terms(scenario.budget, n_subbands);
  return evaluate(scenario, draw_fading(scenario, plan), lambda_total, n_subbands);
}

OutageEstimate fading_outage_direct(const FadingScenario& scenario, double lambda_total,
                                    int n_subbands, const MonteCarloPlan& plan) {
  scenario.validate();
  plan.validate();
  require_density(lambda_total);
  const auto t = partition_terms(scenario.budget, n_subbands);
  const double rate = kPi * lambda_total / n_subbands;
  const std::uint64_t key = derive_seed(plan.seed, kPurposeFadingDirect);
  const auto& kernels = kernels::active();
  std::atomic<std::size_t> outages{0};
  std::atomic<std::size_t> total_terms{0};
  std::atomic<std::size_t> truncated{0};
  parallel_for(plan.replications, plan.threads, [&](std::size_t begin, std::size_t end) {
    std::size_t local = 0;
    std::size_t local_terms = 0;
    std::size_t local_trunc = 0;
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(key, i);
      detail::FadingSampler fading(scenario.fading);
      const double g = draw_gain(scenario, rng, fading);
      // Outage when sum h_i r_i^-alpha >= G / beta - eta / rho.
      const double threshold = g / t.beta - t.eta_over_rho;
      if (threshold <= 0.0) {
        ++local;
        continue;
      }
      if (rate == 0.0) continue;
      detail::RadialWalker walker(scenario.budget.pathloss_alpha, rate, kernels, rng, fading);
      const auto decision = detail::radial_exceeds(walker, plan, threshold);
      if (decision.exceeds) ++local;
      local_terms += decision.terms;
      if (decision.truncated) ++local_trunc;
    }
    outages.fetch_add(local);
    total_terms.fetch_add(local_terms);
    truncated.fetch_add(local_trunc);
  });
  OutageEstimate est;
  est.replications = plan.replications;
  est.outages = outages.load();
  est.probability = static_cast<double>(est.outages) / static_cast<double>(plan.replications);
  est.diagnostics.truncated = truncated.load();
  est.diagnostics.mean_terms =
      static_cast<double>(total_terms.load()) / static_cast<double>(plan.replications);
  if (plan.strict_truncation && est.diagnostics.truncated > 0)
    throw TruncationError(std::to_string(est.diagnostics.truncated) +
                              " replication(s) reached max_terms before the far-field tolerance",
                          est.diagnostics.truncated);
  return est;
}

std::pair<double, double> FadingSweep::interval(int n) const {
  const auto& o = at(n);
  const double half = 3.0 * o.standard_error();
  return {std::max(0.0, o.probability - half), std::min(1.0, o.probability + half)};
}

FadingSweep fading_optimal_n(const FadingScenario& scenario, double lambda_total, int n_min,
                             int n_max, const MonteCarloPlan& plan) {
  require_density(lambda_total);
  if (n_min < 1 || n_max < n_min) throw std::invalid_argument("N range must satisfy 1 <= n_min <= n_max");
  const auto draws = draw_fading(scenario, plan);
  FadingSweep sweep;
  sweep.n_min = n_min;
  sweep.n_opt = n_min;
  for (int n = n_min; n <= n_max; ++n) {
    sweep.outages.push_back(evaluate(scenario, draws, lambda_total, n));
    if (sweep.outages.back().probability < sweep.at(sweep.n_opt).probability) sweep.n_opt = n;
  }
  return sweep;
}

}  // namespace bwpart
