#include "bwpart/params.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bwpart {

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid link budget: ") + what);
}
}  // namespace

void LinkBudget::validate() const {
  require(std::isfinite(rate_bps) && rate_bps > 0, "rate_bps must be > 0");
  require(std::isfinite(bandwidth_hz) && bandwidth_hz > 0, "bandwidth_hz must be > 0");
  require(std::isfinite(power_w) && power_w > 0, "power_w must be > 0");
  require(std::isfinite(distance_m) && distance_m > 0, "distance_m must be > 0");
  require(std::isfinite(pathloss_alpha) && pathloss_alpha > 2, "pathloss_alpha must be > 2");
  require(std::isfinite(noise_density) && noise_density >= 0, "noise_density must be >= 0");
  require(outage_eps > 0 && outage_eps < 1, "outage_eps must lie in (0, 1)");
}

double LinkBudget::received_power() const { return power_w * std::pow(distance_m, -pathloss_alpha); }

double to_db(double linear) { return 10.0 * std::log10(linear); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

EbN0 EbN0::from_linear(double value) {
  if (std::isnan(value) || value < 0) throw std::invalid_argument("Eb/N0 must be >= 0");
  if (std::isinf(value)) return infinite();
  return EbN0(value, false);
}

EbN0 EbN0::from_db(double db) {
  if (std::isnan(db)) throw std::invalid_argument("Eb/N0 in dB is NaN");
  if (db == std::numeric_limits<double>::infinity()) return infinite();
  return from_linear(bwpart::from_db(db));
}

double EbN0::db() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : to_db(linear_);
}

EbN0 eb_n0_of(const LinkBudget& budget) {
  budget.validate();
  if (budget.noise_density == 0.0) return EbN0::infinite();
  return EbN0::from_linear(budget.received_power() / (budget.noise_density * budget.rate_bps));
}

LinkBudget with_eb_n0(LinkBudget budget, EbN0 target) {
  if (target.is_infinite()) {
    budget.noise_density = 0.0;
    return budget;
  }
  if (budget.noise_density <= 0.0)
    throw std::invalid_argument("finite Eb/N0 requires a positive noise density");
  budget.power_w = target.linear() * budget.noise_density * budget.rate_bps *
                   std::pow(budget.distance_m, budget.pathloss_alpha);
  return budget;
}

double beta_of_b(double b) { return std::expm1(b * std::numbers::ln2); }

double b_of_partition(const LinkBudget& budget, int n_subbands) {
  if (n_subbands < 1) throw std::invalid_argument("number of sub-bands must be >= 1");
  return static_cast<double>(n_subbands) * budget.rate_bps / budget.bandwidth_hz;
}

}  // namespace bwpart
