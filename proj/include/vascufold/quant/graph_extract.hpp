#pragma once

#include "vascufold/core/volume.hpp"
#include "vascufold/phantom/vascular_graph.hpp"

namespace vf {

struct ExtractOptions {
    double spur_factor = 2.0;  // prune leaf edges shorter than factor * local radius
    int smooth_passes = 2;     // Taubin smoothing rounds on interior polyline vertices
};

// Centerline graph from a thinned volume. `radius_mm` is the interior depth
// field of the original (unthinned) mask; per-vertex radii come from it.
// Junction voxel clumps collapse to single nodes, chains become edges,
// whisker spurs below ~2 local radii are pruned, and eroded branch tips are
// extended back to the capsule cap centers.
VascularGraph extract_graph(const MaskVolume& skeleton, const VoxelGrid<double>& radius_mm,
                            const ExtractOptions& opts = {});

}  // namespace vf
