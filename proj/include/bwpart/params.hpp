#pragma once

// Physical scenario, Eb/N0 and the b <-> N <-> beta conversions.

#include <limits>

namespace bwpart {

/// One network scenario in SI units.
struct LinkBudget {
  double rate_bps = 1e6;        ///< R
  double bandwidth_hz = 10e6;   ///< W, total system bandwidth
  double power_w = 1.0;         ///< rho, applied at every transmitter
  double noise_density = 0.0;   ///< N0 in W/Hz; zero means interference limited
  double distance_m = 10.0;     ///< d, TX-RX separation
  double pathloss_alpha = 4.0;  ///< alpha > 2
  double outage_eps = 0.1;      ///< outage constraint in (0, 1)

  /// Throws std::invalid_argument naming the first violated field.
  void validate() const;

  /// Received power rho * d^-alpha.
  double received_power() const;

  bool operator==(const LinkBudget&) const = default;
};

double to_db(double linear);
double from_db(double db);

/// Received energy per information bit over N0. N0 = 0 is represented by
/// an explicit infinite sentinel rather than a large number.
class EbN0 {
 public:
  static EbN0 from_linear(double value);
  /// +inf dB maps to the sentinel.
  static EbN0 from_db(double db);
  static EbN0 infinite() { return EbN0(std::numeric_limits<double>::infinity(), true); }

  bool is_infinite() const { return infinite_; }
  /// +inf for the sentinel.
  double linear() const { return linear_; }
  double db() const;

  bool operator==(const EbN0&) const = default;

 private:
  EbN0(double linear, bool infinite) : linear_(linear), infinite_(infinite) {}
  double linear_;
  bool infinite_;
};

EbN0 eb_n0_of(const LinkBudget& budget);

/// Returns a copy whose power is chosen so that eb_n0_of() yields `target`.
/// The infinite sentinel sets the noise density to zero instead.
LinkBudget with_eb_n0(LinkBudget budget, EbN0 target);

/// SINR threshold for spectral efficiency b: 2^b - 1.
double beta_of_b(double b);

/// Operating spectral efficiency N * R / W.
double b_of_partition(const LinkBudget& budget, int n_subbands);

}  // namespace bwpart
