#pragma once

#include "vascufold/core/volume.hpp"

namespace vf {

// Exact squared Euclidean distance transform (separable lower-envelope
// algorithm), anisotropic spacing supported. Output holds the squared
// distance in mm^2 from every voxel center to the nearest nonzero voxel
// center of `seeds`; +inf when there are no seeds.
VoxelGrid<double> distance_transform_sq(const MaskVolume& seeds);

// Distance from each foreground voxel to the nearest background voxel
// center (mm); 0 on background. This is the local-radius field used for
// vessel calibre estimates.
VoxelGrid<double> interior_depth_mm(const MaskVolume& mask);

}  // namespace vf
