#include "vascufold/phantom/rasterize.hpp"

#include <algorithm>
#include <cmath>

#include "vascufold/core/errors.hpp"

namespace vf {
namespace {

struct Capsule {
    Vec3 a, b;
    double ra_mm, rb_mm;  // radius at each end, linearly interpolated
};

// center inside the tapered capsule: |p - lerp(a,b,t*)| <= lerp(ra,rb,t*)
bool inside(const Capsule& c, const Vec3& p) {
    double t;
    double d2 = point_segment_dist2(p, c.a, c.b, &t);
    double r = c.ra_mm + t * (c.rb_mm - c.ra_mm);
    return d2 <= r * r;
}

std::vector<Capsule> collect_capsules(const VascularGraph& graph) {
    std::vector<Capsule> out;
    for (const auto& e : graph.edges)
        for (size_t i = 1; i < e.poly.size(); ++i)
            out.push_back({e.poly[i - 1], e.poly[i], e.radius_um[i - 1] * 1e-3,
                           e.radius_um[i] * 1e-3});
    return out;
}

void check_extent(const VascularGraph& graph, int64_t nz, int64_t ny, int64_t nx,
                  const std::array<double, 3>& s) {
    Vec3 extent = {nx * s[2], ny * s[1], nz * s[0]};
    for (const auto& e : graph.edges) {
        for (size_t i = 0; i < e.poly.size(); ++i) {
            double r = e.radius_um[i] * 1e-3;
            const Vec3& p = e.poly[i];
            if (p.x + r > extent.x + 1e-9 || p.y + r > extent.y + 1e-9 ||
                p.z + r > extent.z + 1e-9 || p.x - r < -1e-9 || p.y - r < -1e-9 ||
                p.z - r < -1e-9)
                throw ConfigError("rasterize: graph extends past the grid extent");
        }
    }
}

}  // namespace

MaskVolume rasterize(const VascularGraph& graph, int64_t nz, int64_t ny, int64_t nx,
                     std::array<double, 3> spacing_mm) {
    check_extent(graph, nz, ny, nx, spacing_mm);
    MaskVolume vol(nz, ny, nx, spacing_mm, 0);
    const double sz = spacing_mm[0], sy = spacing_mm[1], sx = spacing_mm[2];

    for (const auto& c : collect_capsules(graph)) {
        double rmax = std::max(c.ra_mm, c.rb_mm);
        auto lo_idx = [&](double v, double s) {
            return std::max<int64_t>(0, static_cast<int64_t>(std::floor(v / s - 0.5)));
        };
        auto hi_idx = [&](double v, double s, int64_t n) {
            return std::min<int64_t>(n - 1, static_cast<int64_t>(std::ceil(v / s - 0.5)));
        };
        int64_t z0 = lo_idx(std::min(c.a.z, c.b.z) - rmax, sz);
        int64_t z1 = hi_idx(std::max(c.a.z, c.b.z) + rmax, sz, nz);
        int64_t y0 = lo_idx(std::min(c.a.y, c.b.y) - rmax, sy);
        int64_t y1 = hi_idx(std::max(c.a.y, c.b.y) + rmax, sy, ny);
        int64_t x0 = lo_idx(std::min(c.a.x, c.b.x) - rmax, sx);
        int64_t x1 = hi_idx(std::max(c.a.x, c.b.x) + rmax, sx, nx);
        for (int64_t z = z0; z <= z1; ++z)
            for (int64_t y = y0; y <= y1; ++y) {
                uint8_t* row = &vol.at(z, y, 0);
                for (int64_t x = x0; x <= x1; ++x) {
                    if (row[x]) continue;
                    if (inside(c, vol.voxel_center(z, y, x))) row[x] = 1;
                }
            }
    }
    return vol;
}

MaskVolume rasterize_bruteforce(const VascularGraph& graph, int64_t nz, int64_t ny, int64_t nx,
                                std::array<double, 3> spacing_mm) {
    check_extent(graph, nz, ny, nx, spacing_mm);
    MaskVolume vol(nz, ny, nx, spacing_mm, 0);
    auto capsules = collect_capsules(graph);
    for (int64_t z = 0; z < nz; ++z)
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t x = 0; x < nx; ++x) {
                Vec3 p = vol.voxel_center(z, y, x);
                for (const auto& c : capsules) {
                    if (inside(c, p)) {
                        vol.at(z, y, x) = 1;
                        break;
                    }
                }
            }
    return vol;
}

}  // namespace vf
