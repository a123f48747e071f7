#include "bwpart/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bwpart/errors.hpp"

namespace bwpart {

namespace {

constexpr double kInvE = 0.36787944117144232160;  // 1/e

double initial_guess(double z) {
  if (z < -0.25) {
    // Branch-point series in p = sqrt(2 (e z + 1)).
    const double p = std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * z + 1.0)));
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)));
  }
  if (z < 3.0) return std::log1p(z) * (1.0 - std::log1p(std::log1p(z)) / (2.0 + std::log1p(z)));
  const double l1 = std::log(z);
  const double l2 = std::log(l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w0(double z) {
  if (std::isnan(z)) throw std::domain_error("lambert_w0: NaN argument");
  // Allow the rounding of -1/e itself.
  if (z < -kInvE * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()))
    throw std::domain_error("lambert_w0: argument below -1/e");
  if (z <= -kInvE) return -1.0;
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return z;

  double w = initial_guess(z);
  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    // Halley step.
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double dw = f / denom;
    w -= dw;
    if (w < -1.0) w = -1.0;
    if (std::abs(dw) <= 1e-14 * (1.0 + std::abs(w))) break;
  }
  return w;
}

AwgnCapacityPoint awgn_spectral_efficiency(EbN0 eb_n0) {
  if (eb_n0.is_infinite())
    return {eb_n0, std::numeric_limits<double>::infinity(), true};
  const double e = eb_n0.linear();
  if (std::abs(e - std::numbers::ln2) <= 4.0 * std::numeric_limits<double>::epsilon())
    return {eb_n0, 0.0, false};
  if (e < std::numbers::ln2)
    throw InfeasibleError("Eb/N0 at or below ln 2 (-1.59 dB): beyond interference-free capacity");

  // f(C) = 2^C - 1 - e C is negative on (0, C*) and positive beyond.
  auto f = [e](double c) { return std::expm1(c * std::numbers::ln2) - e * c; };
  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return {eb_n0, 0.5 * (lo + hi), false};
}

double awgn_residual(const AwgnCapacityPoint& point) {
  if (point.unbounded) return 0.0;
  const double e = point.eb_n0.linear();
  const double c = point.c_bps_hz;
  const double scale = std::max(e * c, std::numeric_limits<double>::min());
  return std::abs(std::expm1(c * std::numbers::ln2) - e * c) / scale;
}

}  // namespace bwpart
