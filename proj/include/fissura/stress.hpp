#pragma once

#include "fissura/error.hpp"

namespace fissura {

/// Three-point bending geometry: force F, support distance l, and beam
/// cross-section b x h, in caller-consistent units.
struct BendingTestGeometry {
  double force = 0.0;   // F
  double span = 0.0;    // l
  double width = 0.0;   // b
  double height = 0.0;  // h
};

/// Flexural stress f_L = 3*F*l / (2*b*h^2).  No unit conversion is applied.
inline double flexural_stress(const BendingTestGeometry& g) {
  require(g.span > 0.0 && g.width > 0.0 && g.height > 0.0, "cli",
          "span, width and height must be positive");
  require(g.force >= 0.0, "cli", "force must be non-negative");
  return 3.0 * g.force * g.span / (2.0 * g.width * g.height * g.height);
}

}  // namespace fissura
