#pragma once

#include <flarekit/optics.hpp>

namespace flarekit::testing {

/// Exact meridional ray trace through spherical interfaces (vector Snell law,
/// Newton intersection with the true sag). The ray leaves the object plane at
/// `height` with direction angle `angle` and is followed to the sensor plane.
/// Returns the height there and the final direction angle (atan of the slope).
optics::RayState snell_trace_direct(const optics::LensPrescription& lens, double height, double angle);
optics::RayState snell_trace_ghost(const optics::LensPrescription& lens, const optics::GhostPath& path,
                                   double height, double angle);

} // namespace flarekit::testing
