#pragma once

#include "bwpart/params.hpp"

namespace bwpart {

/// Principal branch W0 of the Lambert W function, w * exp(w) = z, w >= -1.
/// Throws std::domain_error for z < -1/e.
double lambert_w0(double z);

struct AwgnCapacityPoint {
  EbN0 eb_n0;
  double c_bps_hz;  ///< +inf when unbounded
  bool unbounded;   ///< set for the interference-limited sentinel
};

/// Largest spectral efficiency C solving 2^C - 1 = (Eb/N0) C.
/// Eb/N0 == ln 2 gives C = 0; anything below throws InfeasibleError.
AwgnCapacityPoint awgn_spectral_efficiency(EbN0 eb_n0);

/// Relative residual |2^C - 1 - e C| / max(e C, tiny) of a capacity point.
double awgn_residual(const AwgnCapacityPoint& point);

}  // namespace bwpart
