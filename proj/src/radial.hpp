#pragma once

// Internal radial PPP walker shared by the Z sampler, the end-to-end outage
// simulation and the fading model.
//
// The squared distances of a planar PPP of intensity lambda, seen from the
// origin, form a 1-D Poisson process of rate nu = pi * lambda. Walking that
// process in blocks, the interference is sum_k w_k s_k^-a with a = alpha / 2.
// Beyond the last squared distance s the neglected sum has
//   mean     nu * s^(1-a) / (a-1)
//   variance nu * E[w^2] * s^(1-2a) / (2a-1).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <random>

#include "bwpart/errors.hpp"
#include "bwpart/kernels.hpp"
#include "bwpart/rng.hpp"
#include "bwpart/stochgeo.hpp"

namespace bwpart::detail {

inline constexpr std::size_t kRadialBlock = 16;

/// Unit-mean fading power draws backed by the replication's stream. Build a
/// fresh sampler per replication: the gamma distribution carries state.
class FadingSampler {
 public:
  explicit FadingSampler(FadingLaw law)
      : law_(law), gamma_(law.kind == FadingLaw::Kind::nakagami ? law.nakagami_m : 1.0,
                          law.kind == FadingLaw::Kind::nakagami ? 1.0 / law.nakagami_m : 1.0) {}

  bool active() const { return law_.kind != FadingLaw::Kind::none; }

  /// E[h^2] for the unit-mean law.
  double second_moment() const {
    switch (law_.kind) {
      case FadingLaw::Kind::none: return 1.0;
      case FadingLaw::Kind::rayleigh: return 2.0;
      case FadingLaw::Kind::nakagami: return 1.0 + 1.0 / law_.nakagami_m;
    }
    return 1.0;
  }

  double draw(CounterRng& rng) {
    switch (law_.kind) {
      case FadingLaw::Kind::none: return 1.0;
      case FadingLaw::Kind::rayleigh: return -std::log(rng.uniform_pos());
      case FadingLaw::Kind::nakagami: return gamma_(rng);
    }
    return 1.0;
  }

 private:
  FadingLaw law_;
  std::gamma_distribution<double> gamma_;
};

class RadialWalker {
 public:
  RadialWalker(double alpha, double rate, const kernels::KernelSet& k, CounterRng& rng,
               FadingSampler& fading)
      : a_(alpha / 2.0), rate_(rate), kernels_(k), rng_(rng), fading_(fading) {
    mean_coef_ = rate_ / (a_ - 1.0);
    var_coef_ = rate_ * fading_.second_moment() / (2.0 * a_ - 1.0);
  }

  /// Advances one block and returns its contribution to the sum.
  double next_block() {
    for (double& x : u_) x = rng_.uniform_pos();
    kernels_.neg_log(u_.data(), s_.data(), kRadialBlock);
    const double inv_rate = 1.0 / rate_;
    for (std::size_t i = 0; i < kRadialBlock; ++i) {
      last_ += s_[i] * inv_rate;
      s_[i] = last_;
    }
    if (terms_ == 0) first_ = s_[0];
    terms_ += kRadialBlock;
    if (!fading_.active()) return kernels_.power_sum(s_.data(), kRadialBlock, a_);
    for (double& w : w_) w = fading_.draw(rng_);
    return kernels_.weighted_power_sum(s_.data(), w_.data(), kRadialBlock, a_);
  }

  double tail_mean() const { return mean_coef_ * std::pow(last_, 1.0 - a_); }
  double tail_std() const { return std::sqrt(var_coef_ * std::pow(last_, 1.0 - 2.0 * a_)); }
  std::size_t terms() const { return terms_; }
  double first_squared_distance() const { return first_; }

 private:
  double a_;
  double rate_;
  double mean_coef_ = 0.0;
  double var_coef_ = 0.0;
  const kernels::KernelSet& kernels_;
  CounterRng& rng_;
  FadingSampler& fading_;
  std::array<double, kRadialBlock> u_{};
  std::array<double, kRadialBlock> s_{};
  std::array<double, kRadialBlock> w_{};
  double last_ = 0.0;
  double first_ = 0.0;
  std::size_t terms_ = 0;
};

struct RadialSum {
  double value = 0.0;  ///< sum including the tail compensation, if any
  std::size_t terms = 0;
  bool truncated = false;
};

/// Full interference sum under the plan's tail rule.
inline RadialSum radial_sum(RadialWalker& walker, const MonteCarloPlan& plan) {
  double sum = 0.0;
  const double tol = plan.truncation_rel_tol;
  for (;;) {
    sum += walker.next_block();
    if (plan.tail_rule == TailRule::fluctuation) {
      if (walker.tail_std() <= tol * sum) return {sum + walker.tail_mean(), walker.terms(), false};
    } else if (walker.tail_mean() <= tol * sum) {
      return {sum, walker.terms(), false};
    }
    if (walker.terms() >= plan.max_terms) {
      const double comp = plan.tail_rule == TailRule::fluctuation ? walker.tail_mean() : 0.0;
      return {sum + comp, walker.terms(), true};
    }
  }
}

struct RadialDecision {
  bool exceeds = false;
  std::size_t terms = 0;
  bool truncated = false;
};

/// Decides whether the interference sum reaches `threshold` without
/// resolving the sum more finely than the decision needs. A non-positive
/// threshold is exceeded before any term is drawn.
inline RadialDecision radial_exceeds(RadialWalker& walker, const MonteCarloPlan& plan,
                                     double threshold) {
  if (threshold <= 0.0) return {true, 0, false};
  double sum = 0.0;
  const double tol = plan.truncation_rel_tol;
  for (;;) {
    sum += walker.next_block();
    if (sum >= threshold) return {true, walker.terms(), false};
    const double mean = walker.tail_mean();
    if (plan.tail_rule == TailRule::fluctuation) {
      const double scale = std::max(sum, std::abs(threshold - (sum + mean)));
      if (walker.tail_std() <= tol * scale)
        return {sum + mean >= threshold, walker.terms(), false};
    } else if (mean <= tol * sum) {
      return {false, walker.terms(), false};
    }
    if (walker.terms() >= plan.max_terms) {
      const double comp = plan.tail_rule == TailRule::fluctuation ? mean : 0.0;
      return {sum + comp >= threshold, walker.terms(), true};
    }
  }
}

}  // namespace bwpart::detail
