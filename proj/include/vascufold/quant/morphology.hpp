#pragma once

#include "vascufold/core/volume.hpp"

namespace vf {

// Euclidean closing with ball radius `radius_voxels * min(spacing)`.
// Capsule-union digitizations pinch at shallow junction wedges, where two
// tube surfaces pass within a voxel of each other and corner-connect into a
// spurious handle; closing turns that crease into a solid fillet before
// thinning. Convex tube cross-sections are unaffected.
MaskVolume close_pinches(const MaskVolume& mask, double radius_voxels = 1.5);

}  // namespace vf
