#include "vascufold/quant/edt.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace vf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher 1D squared-distance transform along a strided
// line. Abscissas are i*s, so anisotropic grids fall out naturally.
struct Dt1d {
    std::vector<int> v;        // parabola sites
    std::vector<double> zb;    // envelope boundaries
    std::vector<double> f, d;

    void run(double* data, int n, int64_t stride, double s) {
        f.resize(n);
        d.resize(n);
        v.resize(n);
        zb.resize(n + 1);
        for (int i = 0; i < n; ++i) f[i] = data[i * stride];

        int q0 = 0;
        while (q0 < n && f[q0] == kInf) q0++;
        if (q0 == n) return;  // no finite sites on this line

        int k = 0;
        v[0] = q0;
        zb[0] = -kInf;
        zb[1] = kInf;
        for (int q = q0 + 1; q < n; ++q) {
            if (f[q] == kInf) continue;
            double xq = q * s;
            while (true) {
                double xv = v[k] * s;
                double zcross = (f[q] + xq * xq - f[v[k]] - xv * xv) / (2.0 * (xq - xv));
                if (zcross <= zb[k]) {
                    k--;  // zb[0] = -inf keeps k >= 0
                } else {
                    k++;
                    v[k] = q;
                    zb[k] = zcross;
                    zb[k + 1] = kInf;
                    break;
                }
            }
        }
        int j = 0;
        for (int q = 0; q < n; ++q) {
            double xq = q * s;
            while (zb[j + 1] < xq) j++;
            double xv = v[j] * s;
            d[q] = (xq - xv) * (xq - xv) + f[v[j]];
        }
        for (int q = 0; q < n; ++q) data[q * stride] = d[q];
    }
};

}  // namespace

VoxelGrid<double> distance_transform_sq(const MaskVolume& seeds) {
    VoxelGrid<double> d(seeds.nz, seeds.ny, seeds.nx, seeds.spacing_mm);
    const int64_t nz = seeds.nz, ny = seeds.ny, nx = seeds.nx;
    for (int64_t i = 0; i < seeds.size(); ++i)
        d.data[i] = seeds.data[i] ? 0.0 : kInf;

    Dt1d dt;
    const double sz = seeds.spacing_mm[0], sy = seeds.spacing_mm[1], sx = seeds.spacing_mm[2];
    for (int64_t z = 0; z < nz; ++z)
        for (int64_t y = 0; y < ny; ++y)
            dt.run(&d.at(z, y, 0), static_cast<int>(nx), 1, sx);
    for (int64_t z = 0; z < nz; ++z)
        for (int64_t x = 0; x < nx; ++x)
            dt.run(&d.at(z, 0, x), static_cast<int>(ny), nx, sy);
    for (int64_t y = 0; y < ny; ++y)
        for (int64_t x = 0; x < nx; ++x)
            dt.run(&d.at(0, y, x), static_cast<int>(nz), ny * nx, sz);
    return d;
}

VoxelGrid<double> interior_depth_mm(const MaskVolume& mask) {
    MaskVolume background(mask.nz, mask.ny, mask.nx, mask.spacing_mm);
    for (int64_t i = 0; i < mask.size(); ++i) background.data[i] = mask.data[i] ? 0 : 1;
    auto d2 = distance_transform_sq(background);
    for (auto& v : d2.data) v = v == kInf ? kInf : std::sqrt(v);
    return d2;
}

}  // namespace vf
