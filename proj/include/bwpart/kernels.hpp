#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference built on
// <cmath> and, on x86-64, an AVX2/FMA variant chosen at runtime when the
// CPU supports it. Both variants take the same inputs and agree to a few
// ulps; the equivalence tests pin the tolerance.

#include <cstddef>
#include <span>
#include <string_view>

namespace bwpart::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

/// Parameters for evaluating b * (1/(2^b - 1) - inv_eb_n0 / b)^exponent on
/// the grid b_k = first_b + k * step. Non-positive brackets evaluate to 0.
struct DensityGridArgs {
  double inv_eb_n0 = 0.0;  ///< 1 / (Eb/N0); 0 for the interference-limited case
  double exponent = 0.5;   ///< 2 / alpha
  double first_b = 0.0;
  double step = 1e-4;
};

/// Raw-pointer entry points; callers go through the span wrappers below.
struct KernelSet {
  Isa isa;
  /// out[i] = -log(u[i]) for u in (0, 1].
  void (*neg_log)(const double* u, double* out, std::size_t n);
  /// sum_i x[i]^-a for x > 0.
  double (*power_sum)(const double* x, std::size_t n, double a);
  /// sum_i w[i] * x[i]^-a.
  double (*weighted_power_sum)(const double* x, const double* w, std::size_t n, double a);
  void (*density_grid)(const DensityGridArgs& args, double* out, std::size_t n);
};

const KernelSet& scalar_kernels();
/// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelSet* avx2_kernels();

bool available(Isa isa);
/// Kernel set used by the library. Defaults to the widest available ISA;
/// the BWPART_ISA environment variable ("scalar" or "avx2") overrides it.
const KernelSet& active();
/// Throws std::invalid_argument if `isa` is unavailable.
void select(Isa isa);
void select_auto();

inline void neg_log(const KernelSet& k, std::span<const double> u, std::span<double> out) {
  k.neg_log(u.data(), out.data(), u.size());
}
inline double power_sum(const KernelSet& k, std::span<const double> x, double a) {
  return k.power_sum(x.data(), x.size(), a);
}
inline double weighted_power_sum(const KernelSet& k, std::span<const double> x,
                                 std::span<const double> w, double a) {
  return k.weighted_power_sum(x.data(), w.data(), x.size(), a);
}
inline void density_grid(const KernelSet& k, const DensityGridArgs& args, std::span<double> out) {
  k.density_grid(args, out.data(), out.size());
}

}  // namespace bwpart::kernels
