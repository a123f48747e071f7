// Reference kernels on top of <cmath>.

#include <cmath>
#include <numbers>

#include "bwpart/kernels.hpp"

namespace bwpart::kernels {

namespace {

void neg_log_scalar(const double* u, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = -std::log(u[i]);
}

double power_sum_scalar(const double* x, std::size_t n, double a) {
  double sum = 0.0;
  if (a == 2.0) {
    for (std::size_t i = 0; i < n; ++i) sum += 1.0 / (x[i] * x[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) sum += std::pow(x[i], -a);
  }
  return sum;
}

double weighted_power_sum_scalar(const double* x, const double* w, std::size_t n, double a) {
  double sum = 0.0;
  if (a == 2.0) {
    for (std::size_t i = 0; i < n; ++i) sum += w[i] / (x[i] * x[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) sum += w[i] * std::pow(x[i], -a);
  }
  return sum;
}

void density_grid_scalar(const DensityGridArgs& args, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double b = args.first_b + static_cast<double>(k) * args.step;
    const double br = 1.0 / std::expm1(b * std::numbers::ln2) - args.inv_eb_n0 / b;
    out[k] = br > 0.0 ? b * std::pow(br, args.exponent) : 0.0;
  }
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{Isa::scalar, neg_log_scalar, power_sum_scalar,
                             weighted_power_sum_scalar, density_grid_scalar};
  return set;
}

}  // namespace bwpart::kernels
