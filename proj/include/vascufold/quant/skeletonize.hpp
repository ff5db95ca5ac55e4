#pragma once

#include "vascufold/core/volume.hpp"

namespace vf {

// Topology-preserving thinning: deletes only simple points under
// 26-connectivity foreground / 6-connectivity background, keeps curve
// endpoints, and removes deeper voxels last so centerlines stay medial.
// Euler characteristic and component count of the foreground are invariant.
MaskVolume skeletonize(const MaskVolume& volume);

// (26,6) simple-point test on the 3x3x3 neighborhood of (z,y,x).
// Exposed for the topology oracles in the tests.
bool is_simple_point(const MaskVolume& v, int64_t z, int64_t y, int64_t x);

}  // namespace vf
