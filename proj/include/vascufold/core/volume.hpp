#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/vec3.hpp"

namespace vf {

// 3D scalar grid, zyx row-major, physical spacing in mm, origin at 0.
// Voxel (z,y,x) has its center at ((x+.5)sx, (y+.5)sy, (z+.5)sz) mm.
template <typename T>
struct VoxelGrid {
    int64_t nz = 0, ny = 0, nx = 0;
    std::array<double, 3> spacing_mm = {0.01, 0.01, 0.01};  // (sz, sy, sx)
    std::vector<T> data;

    VoxelGrid() = default;
    VoxelGrid(int64_t nz_, int64_t ny_, int64_t nx_, std::array<double, 3> spacing, T fill = T{})
        : nz(nz_), ny(ny_), nx(nx_), spacing_mm(spacing),
          data(static_cast<size_t>(nz_ * ny_ * nx_), fill) {
        if (nz_ <= 0 || ny_ <= 0 || nx_ <= 0) throw ShapeError("VoxelGrid: nonpositive dims");
        if (spacing[0] <= 0 || spacing[1] <= 0 || spacing[2] <= 0)
            throw ConfigError("VoxelGrid: spacing must be positive");
    }

    int64_t size() const { return nz * ny * nx; }
    int64_t index(int64_t z, int64_t y, int64_t x) const { return (z * ny + y) * nx + x; }

    T& at(int64_t z, int64_t y, int64_t x) { return data[static_cast<size_t>(index(z, y, x))]; }
    const T& at(int64_t z, int64_t y, int64_t x) const {
        return data[static_cast<size_t>(index(z, y, x))];
    }

    bool in_bounds(int64_t z, int64_t y, int64_t x) const {
        return z >= 0 && z < nz && y >= 0 && y < ny && x >= 0 && x < nx;
    }

    Vec3 voxel_center(int64_t z, int64_t y, int64_t x) const {
        return {(x + 0.5) * spacing_mm[2], (y + 0.5) * spacing_mm[1], (z + 0.5) * spacing_mm[0]};
    }

    double voxel_volume_mm3() const { return spacing_mm[0] * spacing_mm[1] * spacing_mm[2]; }

    bool same_grid(const VoxelGrid& o) const {
        return nz == o.nz && ny == o.ny && nx == o.nx && spacing_mm == o.spacing_mm;
    }
};

using MaskVolume = VoxelGrid<uint8_t>;
using FloatVolume = VoxelGrid<float>;

// Serialization: "<base>.json" header {dims, spacing_mm, dtype, order} plus
// "<base>.raw" little-endian payload.
void save_volume(const MaskVolume& v, const std::string& path_base);
void save_volume(const FloatVolume& v, const std::string& path_base);
MaskVolume load_mask_volume(const std::string& path_base);
FloatVolume load_float_volume(const std::string& path_base);

int64_t count_foreground(const MaskVolume& v);

}  // namespace vf
