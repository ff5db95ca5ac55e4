#include "vascufold/quant/skeletonize.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <vector>

#include "vascufold/quant/edt.hpp"

namespace vf {
namespace {

// offsets of the 26-neighborhood, z-major
struct Off {
    int dz, dy, dx;
};

std::array<Off, 26> make_n26() {
    std::array<Off, 26> o{};
    int i = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (dz || dy || dx) o[i++] = {dz, dy, dx};
    return o;
}

const std::array<Off, 26> kN26 = make_n26();

inline int cube_index(int dz, int dy, int dx) { return (dz + 1) * 9 + (dy + 1) * 3 + (dx + 1); }

// Fetch the 3x3x3 neighborhood as 27 bools (center at index 13).
inline void fetch_cube(const MaskVolume& v, int64_t z, int64_t y, int64_t x, bool cube[27]) {
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int64_t zz = z + dz, yy = y + dy, xx = x + dx;
                cube[cube_index(dz, dy, dx)] =
                    v.in_bounds(zz, yy, xx) && v.at(zz, yy, xx) != 0;
            }
}

// T26: 26-components of foreground within N26*(p). Must be exactly 1.
int count_t26(const bool cube[27]) {
    bool seen[27] = {};
    int comps = 0;
    int stack[27];
    for (int s = 0; s < 27; ++s) {
        if (s == 13 || !cube[s] || seen[s]) continue;
        comps++;
        int top = 0;
        stack[top++] = s;
        seen[s] = true;
        while (top) {
            int c = stack[--top];
            int cz = c / 9 - 1, cy = (c / 3) % 3 - 1, cx = c % 3 - 1;
            for (const auto& o : kN26) {
                int nz = cz + o.dz, ny = cy + o.dy, nx = cx + o.dx;
                if (nz < -1 || nz > 1 || ny < -1 || ny > 1 || nx < -1 || nx > 1) continue;
                int ni = cube_index(nz, ny, nx);
                if (ni == 13 || !cube[ni] || seen[ni]) continue;
                seen[ni] = true;
                stack[top++] = ni;
            }
        }
    }
    return comps;
}

// T6: 6-components of background within the 18-neighborhood that touch a
// face neighbor of the center. Must be exactly 1.
int count_t6(const bool cube[27]) {
    auto in_n18 = [](int i) {
        if (i == 13) return false;
        int dz = i / 9 - 1, dy = (i / 3) % 3 - 1, dx = i % 3 - 1;
        return std::abs(dz) + std::abs(dy) + std::abs(dx) <= 2;
    };
    static const int face_ids[6] = {cube_index(-1, 0, 0), cube_index(1, 0, 0),
                                    cube_index(0, -1, 0), cube_index(0, 1, 0),
                                    cube_index(0, 0, -1), cube_index(0, 0, 1)};
    bool seen[27] = {};
    int comps = 0;
    int stack[27];
    for (int f = 0; f < 6; ++f) {
        int s = face_ids[f];
        if (cube[s] || seen[s]) continue;
        comps++;
        int top = 0;
        stack[top++] = s;
        seen[s] = true;
        while (top) {
            int c = stack[--top];
            int cz = c / 9 - 1, cy = (c / 3) % 3 - 1, cx = c % 3 - 1;
            static const Off faces[6] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                         {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
            for (const auto& o : faces) {
                int nz = cz + o.dz, ny = cy + o.dy, nx = cx + o.dx;
                if (nz < -1 || nz > 1 || ny < -1 || ny > 1 || nx < -1 || nx > 1) continue;
                int ni = cube_index(nz, ny, nx);
                if (!in_n18(ni) || cube[ni] || seen[ni]) continue;
                seen[ni] = true;
                stack[top++] = ni;
            }
        }
    }
    return comps;
}

inline int fg_neighbor_count(const MaskVolume& v, int64_t z, int64_t y, int64_t x) {
    int n = 0;
    for (const auto& o : kN26) {
        int64_t zz = z + o.dz, yy = y + o.dy, xx = x + o.dx;
        if (v.in_bounds(zz, yy, xx) && v.at(zz, yy, xx)) n++;
    }
    return n;
}

}  // namespace

bool is_simple_point(const MaskVolume& v, int64_t z, int64_t y, int64_t x) {
    bool cube[27];
    fetch_cube(v, z, y, x, cube);
    return count_t26(cube) == 1 && count_t6(cube) == 1;
}

MaskVolume skeletonize(const MaskVolume& volume) {
    MaskVolume skel = volume;
    auto depth = interior_depth_mm(volume);

    // Distance-ordered homotopic thinning: peel boundary voxels from the
    // outside in (ascending interior depth), re-checking simplicity at
    // deletion time so every removal is individually topology-safe. The
    // 2x2x2 parity tie-break matters for equal-depth medial ribbons: it
    // dismantles one rail completely instead of unzipping the ribbon from
    // an end, which would shorten the centerline.
    struct Cand {
        double depth;
        int parity;
        int64_t idx;
    };
    std::vector<int64_t> active;
    for (int64_t i = 0; i < skel.size(); ++i)
        if (skel.data[i]) active.push_back(i);

    std::vector<Cand> cands;
    bool changed = true;
    while (changed) {
        changed = false;
        cands.clear();
        for (int64_t idx : active) {
            if (!skel.data[idx]) continue;
            int64_t z = idx / (skel.ny * skel.nx);
            int64_t y = (idx / skel.nx) % skel.ny;
            int64_t x = idx % skel.nx;
            if (fg_neighbor_count(skel, z, y, x) <= 1) continue;  // endpoint
            if (!is_simple_point(skel, z, y, x)) continue;
            int parity = static_cast<int>((z & 1) << 2 | (y & 1) << 1 | (x & 1));
            cands.push_back({depth.data[idx], parity, idx});
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.depth != b.depth) return a.depth < b.depth;
            if (a.parity != b.parity) return a.parity < b.parity;
            return a.idx < b.idx;
        });
        for (const auto& c : cands) {
            int64_t z = c.idx / (skel.ny * skel.nx);
            int64_t y = (c.idx / skel.nx) % skel.ny;
            int64_t x = c.idx % skel.nx;
            if (fg_neighbor_count(skel, z, y, x) <= 1) continue;
            if (!is_simple_point(skel, z, y, x)) continue;
            skel.data[c.idx] = 0;
            changed = true;
        }
        if (changed) {
            std::vector<int64_t> next;
            next.reserve(active.size());
            for (int64_t idx : active)
                if (skel.data[idx]) next.push_back(idx);
            active.swap(next);
        }
    }
    return skel;
}

}  // namespace vf
