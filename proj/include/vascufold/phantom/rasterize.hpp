#pragma once

#include <array>
#include <cstdint>

#include "vascufold/core/volume.hpp"
#include "vascufold/phantom/vascular_graph.hpp"

namespace vf {

// Capsule-union rasterization: a voxel is foreground iff its center lies
// within the locally interpolated radius of some polyline segment.
MaskVolume rasterize(const VascularGraph& graph, int64_t nz, int64_t ny, int64_t nx,
                     std::array<double, 3> spacing_mm);

// O(voxels x segments) reference used by the tests.
MaskVolume rasterize_bruteforce(const VascularGraph& graph, int64_t nz, int64_t ny, int64_t nx,
                                std::array<double, 3> spacing_mm);

}  // namespace vf
