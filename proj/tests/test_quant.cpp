#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "vascufold/core/rng.hpp"
#include "vascufold/phantom/phantom.hpp"
#include "vascufold/phantom/rasterize.hpp"
#include "vascufold/quant/edt.hpp"
#include "vascufold/quant/graph_extract.hpp"
#include "vascufold/quant/morphology.hpp"
#include "vascufold/quant/quant.hpp"
#include "vascufold/quant/skeletonize.hpp"

using namespace vf;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- independent topology oracles ----------------------------------------

int components_fg26(const MaskVolume& v) {
    std::vector<int> label(v.size(), 0);
    int comps = 0;
    for (int64_t start = 0; start < v.size(); ++start) {
        if (!v.data[start] || label[start]) continue;
        comps++;
        std::queue<int64_t> q;
        q.push(start);
        label[start] = comps;
        while (!q.empty()) {
            int64_t idx = q.front();
            q.pop();
            int64_t z = idx / (v.ny * v.nx), y = (idx / v.nx) % v.ny, x = idx % v.nx;
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dz && !dy && !dx) continue;
                        int64_t zz = z + dz, yy = y + dy, xx = x + dx;
                        if (!v.in_bounds(zz, yy, xx)) continue;
                        int64_t ni = v.index(zz, yy, xx);
                        if (!v.data[ni] || label[ni]) continue;
                        label[ni] = comps;
                        q.push(ni);
                    }
        }
    }
    return comps;
}

// background 6-components over a 1-voxel padded domain (outer air fused)
int components_bg6(const MaskVolume& v) {
    int64_t nz = v.nz + 2, ny = v.ny + 2, nx = v.nx + 2;
    auto fg = [&](int64_t z, int64_t y, int64_t x) {
        return z > 0 && z <= v.nz && y > 0 && y <= v.ny && x > 0 && x <= v.nx &&
               v.at(z - 1, y - 1, x - 1);
    };
    std::vector<int> label(static_cast<size_t>(nz * ny * nx), 0);
    auto lidx = [&](int64_t z, int64_t y, int64_t x) { return (z * ny + y) * nx + x; };
    int comps = 0;
    for (int64_t z = 0; z < nz; ++z)
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t x = 0; x < nx; ++x) {
                if (fg(z, y, x) || label[lidx(z, y, x)]) continue;
                comps++;
                std::queue<std::array<int64_t, 3>> q;
                q.push({z, y, x});
                label[lidx(z, y, x)] = comps;
                while (!q.empty()) {
                    auto [cz, cy, cx] = q.front();
                    q.pop();
                    const int d[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                         {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
                    for (auto& o : d) {
                        int64_t zz = cz + o[0], yy = cy + o[1], xx = cx + o[2];
                        if (zz < 0 || zz >= nz || yy < 0 || yy >= ny || xx < 0 || xx >= nx)
                            continue;
                        if (fg(zz, yy, xx) || label[lidx(zz, yy, xx)]) continue;
                        label[lidx(zz, yy, xx)] = comps;
                        q.push({zz, yy, xx});
                    }
                }
            }
    return comps;
}

// Euler characteristic of the union of closed unit cubes (the polyhedron
// realizing 26-connected foreground / 6-connected background):
// chi = V - E + F - C over cells incident to at least one foreground voxel.
long euler26(const MaskVolume& v) {
    auto fgv = [&](int64_t z, int64_t y, int64_t x) {
        return v.in_bounds(z, y, x) && v.at(z, y, x) != 0;
    };
    long verts = 0, edges = 0, faces = 0, cubes = 0;
    for (int64_t z = 0; z <= v.nz; ++z)
        for (int64_t y = 0; y <= v.ny; ++y)
            for (int64_t x = 0; x <= v.nx; ++x) {
                // lattice vertex: 8 incident voxels
                bool any = false;
                for (int dz = -1; dz <= 0 && !any; ++dz)
                    for (int dy = -1; dy <= 0 && !any; ++dy)
                        for (int dx = -1; dx <= 0 && !any; ++dx)
                            any = fgv(z + dz, y + dy, x + dx);
                if (any) verts++;
                // edges along +x, +y, +z: 4 incident voxels each
                struct EdgeDef {
                    int va[4][3];
                };
                // +x edge at (z,y,x): incident voxels (z-1..z, y-1..y, x)
                if (x < v.nx) {
                    bool e = fgv(z - 1, y - 1, x) || fgv(z - 1, y, x) || fgv(z, y - 1, x) ||
                             fgv(z, y, x);
                    if (e) edges++;
                }
                if (y < v.ny) {
                    bool e = fgv(z - 1, y, x - 1) || fgv(z - 1, y, x) || fgv(z, y, x - 1) ||
                             fgv(z, y, x);
                    if (e) edges++;
                }
                if (z < v.nz) {
                    bool e = fgv(z, y - 1, x - 1) || fgv(z, y - 1, x) || fgv(z, y, x - 1) ||
                             fgv(z, y, x);
                    if (e) edges++;
                }
                // faces normal to z, y, x: 2 incident voxels each
                if (y < v.ny && x < v.nx) {
                    if (fgv(z - 1, y, x) || fgv(z, y, x)) faces++;
                }
                if (z < v.nz && x < v.nx) {
                    if (fgv(z, y - 1, x) || fgv(z, y, x)) faces++;
                }
                if (z < v.nz && y < v.ny) {
                    if (fgv(z, y, x - 1) || fgv(z, y, x)) faces++;
                }
                if (z < v.nz && y < v.ny && x < v.nx) {
                    if (fgv(z, y, x)) cubes++;
                }
            }
    return verts - edges + faces - cubes;
}

MaskVolume random_blob(uint64_t seed, int64_t n, double fill) {
    Rng rng(seed);
    MaskVolume v(n, n, n, {0.01, 0.01, 0.01}, 0);
    for (auto& b : v.data) b = rng.uniform() < fill ? 1 : 0;
    return v;
}

VascularGraph make_tube_graph(double radius_um, Vec3 a, Vec3 b, Vec3 region) {
    VascularGraph g;
    g.nodes = {{0, a}, {1, b}};
    g.edges = {{0, 0, 1, {a, b}, {radius_um, radius_um}}};
    g.region_mm = region;
    return g;
}

}  // namespace

TEST_CASE("distance transform equals brute force on random masks") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        auto seeds = random_blob(seed, 12, 0.08);
        seeds.spacing_mm = {0.03, 0.01, 0.02};  // anisotropic on purpose
        auto d2 = distance_transform_sq(seeds);
        for (int64_t z = 0; z < seeds.nz; ++z)
            for (int64_t y = 0; y < seeds.ny; ++y)
                for (int64_t x = 0; x < seeds.nx; ++x) {
                    double best = kInf;
                    for (int64_t sz = 0; sz < seeds.nz; ++sz)
                        for (int64_t sy = 0; sy < seeds.ny; ++sy)
                            for (int64_t sx = 0; sx < seeds.nx; ++sx) {
                                if (!seeds.at(sz, sy, sx)) continue;
                                double dz = (z - sz) * seeds.spacing_mm[0];
                                double dy = (y - sy) * seeds.spacing_mm[1];
                                double dx = (x - sx) * seeds.spacing_mm[2];
                                best = std::min(best, dz * dz + dy * dy + dx * dx);
                            }
                    double got = d2.at(z, y, x);
                    if (best == kInf)
                        CHECK(got == kInf);
                    else
                        CHECK(got == doctest::Approx(best).epsilon(1e-12));
                }
    }
}

TEST_CASE("simple point test agrees with the homology oracle") {
    int checked = 0;
    for (uint64_t seed = 0; seed < 60; ++seed) {
        auto v = random_blob(seed, 5, 0.45);
        int64_t c = v.index(2, 2, 2);
        if (!v.data[c]) {
            v.data[c] = 1;
        }
        bool claim = is_simple_point(v, 2, 2, 2);

        int f0 = components_fg26(v), b0 = components_bg6(v);
        long e0 = euler26(v);
        MaskVolume w = v;
        w.data[c] = 0;
        int f1 = components_fg26(w), b1 = components_bg6(w);
        long e1 = euler26(w);
        bool oracle = f0 == f1 && b0 == b1 && e0 == e1;
        CHECK(claim == oracle);
        checked++;
    }
    CHECK(checked == 60);
}

TEST_CASE("thinning preserves components, cavities and Euler characteristic") {
    for (uint64_t seed : {4u, 5u, 6u, 7u}) {
        auto v = random_blob(seed, 10, 0.55);
        auto s = skeletonize(v);
        CHECK(components_fg26(s) == components_fg26(v));
        CHECK(components_bg6(s) == components_bg6(v));
        CHECK(euler26(s) == euler26(v));
        // result is thin: nothing deletable remains
        for (int64_t i = 0; i < s.size(); ++i) {
            if (!s.data[i]) continue;
            int64_t z = i / (s.ny * s.nx), y = (i / s.nx) % s.ny, x = i % s.nx;
            int nb = 0;
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        if ((dz || dy || dx) && s.in_bounds(z + dz, y + dy, x + dx) &&
                            s.at(z + dz, y + dy, x + dx))
                            nb++;
            if (nb > 1) CHECK(!is_simple_point(s, z, y, x));
        }
    }
}

TEST_CASE("empty volume skeletonizes to empty") {
    MaskVolume v(8, 8, 8, {0.01, 0.01, 0.01}, 0);
    auto s = skeletonize(v);
    CHECK(count_foreground(s) == 0);
}

TEST_CASE("straight tube thins to a near-axial chain") {
    auto g = make_tube_graph(40.0, {0.305, 0.305, 0.1}, {0.305, 0.305, 0.54}, {0.6, 0.6, 0.64});
    auto vol = rasterize(g, 64, 60, 60, {0.01, 0.01, 0.01});
    auto s = skeletonize(vol);
    REQUIRE(count_foreground(s) > 10);
    Vec3 a = {0.305, 0.305, 0.1}, b = {0.305, 0.305, 0.54};
    for (int64_t z = 0; z < s.nz; ++z)
        for (int64_t y = 0; y < s.ny; ++y)
            for (int64_t x = 0; x < s.nx; ++x) {
                if (!s.at(z, y, x)) continue;
                double d = std::sqrt(point_segment_dist2(s.voxel_center(z, y, x), a, b));
                CHECK(d <= 0.01 + 1e-9);  // within one voxel of the axis
                // width 1: exactly 0..2 neighbors along a chain
                int nb = 0;
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx)
                            if ((dz || dy || dx) && s.in_bounds(z + dz, y + dy, x + dx) &&
                                s.at(z + dz, y + dy, x + dx))
                                nb++;
                CHECK(nb <= 2);
            }
}

TEST_CASE("solid torus skeletonizes to a single cycle") {
    // circle of radius 0.18 in the z=0.3 plane, tube radius 0.05
    MaskVolume v(60, 60, 60, {0.01, 0.01, 0.01}, 0);
    Vec3 c = {0.3, 0.3, 0.3};
    for (int64_t z = 0; z < v.nz; ++z)
        for (int64_t y = 0; y < v.ny; ++y)
            for (int64_t x = 0; x < v.nx; ++x) {
                Vec3 p = v.voxel_center(z, y, x);
                double rho = std::sqrt((p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y));
                double d2 = (rho - 0.18) * (rho - 0.18) + (p.z - c.z) * (p.z - c.z);
                if (d2 <= 0.05 * 0.05) v.at(z, y, x) = 1;
            }
    auto s = skeletonize(v);
    CHECK(components_fg26(s) == 1);
    CHECK(euler26(s) == 0);  // one loop
    auto depth = interior_depth_mm(v);
    auto graph = extract_graph(s, depth);
    CHECK(graph.components() == 1);
    CHECK(graph.cycles() == 1);
}

TEST_CASE("tube extraction gives two nodes and one edge") {
    auto g = make_tube_graph(40.0, {0.305, 0.305, 0.1}, {0.305, 0.305, 0.54}, {0.6, 0.6, 0.64});
    auto vol = rasterize(g, 64, 60, 60, {0.01, 0.01, 0.01});
    auto s = skeletonize(vol);
    auto depth = interior_depth_mm(vol);
    auto graph = extract_graph(s, depth);
    CHECK(graph.nodes.size() == 2);
    CHECK(graph.edges.size() == 1);
    // recovered length and calibre close to truth
    double len = graph.total_length_mm();
    CHECK(len == doctest::Approx(0.44).epsilon(0.08));
    auto props = analytic_properties(graph, 0.6 * 0.6 * 0.64);
    CHECK(props.mean_diameter_um == doctest::Approx(80.0).epsilon(0.10));
}

TEST_CASE("Y junction extraction gives 4 nodes and 3 edges") {
    VascularGraph g;
    Vec3 p0 = {0.5, 0.5, 0.1};
    Vec3 pj = {0.5, 0.5, 0.5};
    Vec3 p1 = {0.28, 0.5, 0.86};
    Vec3 p2 = {0.72, 0.5, 0.86};
    g.nodes = {{0, p0}, {1, pj}, {2, p1}, {3, p2}};
    g.edges = {{0, 0, 1, {p0, pj}, {50, 50}},
               {1, 1, 2, {pj, p1}, {40, 40}},
               {2, 1, 3, {pj, p2}, {40, 40}}};
    g.region_mm = {1.0, 1.0, 1.0};
    auto vol = rasterize(g, 100, 100, 100, {0.01, 0.01, 0.01});
    auto s = skeletonize(vol);
    auto depth = interior_depth_mm(vol);
    auto graph = extract_graph(s, depth);
    CHECK(graph.nodes.size() == 4);
    CHECK(graph.edges.size() == 3);
    CHECK(graph.cycles() == 0);
}

TEST_CASE("loop phantoms keep their cycle count through extraction") {
    for (int loops : {1, 2}) {
        PhantomConfig cfg;
        cfg.depth = 3;
        cfg.loops = loops;
        cfg.seed = 60 + loops;
        auto g = generate_network(cfg);
        auto vol = rasterize(g, 128, 128, 128, {0.01, 0.01, 0.01});
        auto filled = close_pinches(vol);  // pipeline closes junction pinches first
        auto s = skeletonize(filled);
        auto depth = interior_depth_mm(filled);
        auto graph = extract_graph(s, depth);
        CHECK(graph.components() == g.components());
        CHECK(graph.cycles() == loops);
    }
}

TEST_CASE("extracted density and diameter track the analytic truth") {
    PhantomConfig cfg;
    cfg.depth = 3;
    cfg.seed = 101;
    auto g = generate_network(cfg);
    double region = cfg.region_mm.x * cfg.region_mm.y * cfg.region_mm.z;
    auto truth = analytic_properties(g, region);
    auto vol = rasterize(g, 128, 128, 128, {0.01, 0.01, 0.01});
    auto filled = close_pinches(vol);
    auto s = skeletonize(filled);
    auto depth = interior_depth_mm(filled);
    auto graph = extract_graph(s, depth);
    auto got = analytic_properties(graph, region);
    CHECK(std::abs(got.vessel_density - truth.vessel_density) / truth.vessel_density < 0.05);
    CHECK(std::abs(got.mean_diameter_um - truth.mean_diameter_um) / truth.mean_diameter_um < 0.10);
}

TEST_CASE("Poiseuille resistance closed forms") {
    const double mu = 3.5e-3;
    auto tube_resistance = [&](double r_mm, double l_mm) {
        return 8.0 * mu * l_mm / (kPi * r_mm * r_mm * r_mm * r_mm);
    };

    SUBCASE("single tube") {
        auto g = make_tube_graph(50.0, {0.5, 0.5, 0.2}, {0.5, 0.5, 1.2}, {1, 1, 1.4});
        QuantOptions opt;
        opt.region_volume_mm3 = 1.4;
        opt.inlet_node = 0;
        opt.outlet_node = 1;
        auto rep = compute_quant(g, opt);
        CHECK(rep.inlet_outlet_connected);
        CHECK(rep.network_resistance ==
              doctest::Approx(tube_resistance(0.05, 1.0)).epsilon(1e-12));
        CHECK(rep.solve_residual < 1e-10);
    }
    SUBCASE("two tubes in series double the resistance") {
        VascularGraph g;
        Vec3 a = {0.5, 0.5, 0.1}, m = {0.5, 0.5, 1.1}, b = {0.5, 0.5, 2.1};
        g.nodes = {{0, a}, {1, m}, {2, b}};
        g.edges = {{0, 0, 1, {a, m}, {50, 50}}, {1, 1, 2, {m, b}, {50, 50}}};
        g.region_mm = {1, 1, 2.2};
        QuantOptions opt;
        opt.region_volume_mm3 = 2.2;
        opt.inlet_node = 0;
        opt.outlet_node = 2;
        auto rep = compute_quant(g, opt);
        CHECK(rep.network_resistance ==
              doctest::Approx(2.0 * tube_resistance(0.05, 1.0)).epsilon(1e-9));
        CHECK(rep.solve_residual < 1e-10);
    }
    SUBCASE("two tubes in parallel halve the resistance") {
        VascularGraph g;
        Vec3 a = {0.5, 0.5, 0.1}, b = {0.5, 0.5, 1.1};
        Vec3 m1 = {0.3, 0.5, 0.6}, m2 = {0.7, 0.5, 0.6};
        g.nodes = {{0, a}, {1, b}, {2, m1}, {3, m2}};
        // two equal-length two-hop paths a->m->b
        g.edges = {{0, 0, 2, {a, m1}, {50, 50}},
                   {1, 2, 1, {m1, b}, {50, 50}},
                   {2, 0, 3, {a, m2}, {50, 50}},
                   {3, 3, 1, {m2, b}, {50, 50}}};
        g.region_mm = {1, 1, 1.2};
        QuantOptions opt;
        opt.region_volume_mm3 = 1.2;
        opt.inlet_node = 0;
        opt.outlet_node = 1;
        auto rep = compute_quant(g, opt);
        double hop = norm(m1 - a);
        double path = 2.0 * tube_resistance(0.05, hop);
        CHECK(rep.network_resistance == doctest::Approx(path / 2.0).epsilon(1e-9));
        CHECK(rep.solve_residual < 1e-10);
    }
    SUBCASE("disconnected terminals give the infinite sentinel") {
        VascularGraph g;
        Vec3 a = {0.2, 0.5, 0.2}, b = {0.2, 0.5, 0.8};
        Vec3 c = {0.8, 0.5, 0.2}, d = {0.8, 0.5, 0.8};
        g.nodes = {{0, a}, {1, b}, {2, c}, {3, d}};
        g.edges = {{0, 0, 1, {a, b}, {40, 40}}, {1, 2, 3, {c, d}, {40, 40}}};
        g.region_mm = {1, 1, 1};
        QuantOptions opt;
        opt.region_volume_mm3 = 1.0;
        opt.inlet_node = 0;
        opt.outlet_node = 3;
        auto rep = compute_quant(g, opt);
        CHECK(!rep.inlet_outlet_connected);
        CHECK(rep.network_resistance == kInf);
    }
}

TEST_CASE("scale equivariance of the quantitative parameters") {
    PhantomConfig cfg;
    cfg.depth = 2;
    cfg.loops = 1;
    cfg.seed = 8;
    auto g = generate_network(cfg);
    double region = cfg.region_mm.x * cfg.region_mm.y * cfg.region_mm.z;

    const double lambda = 2.5;
    VascularGraph gs = g;
    gs.region_mm = g.region_mm * lambda;
    for (auto& n : gs.nodes) n.p = n.p * lambda;
    for (auto& e : gs.edges) {
        for (auto& p : e.poly) p = p * lambda;
        for (auto& r : e.radius_um) r *= lambda;
    }

    QuantOptions o1, o2;
    o1.region_volume_mm3 = region;
    o2.region_volume_mm3 = region * lambda * lambda * lambda;
    auto r1 = compute_quant(g, o1);
    auto r2 = compute_quant(gs, o2);
    CHECK(r2.morph.vessel_density ==
          doctest::Approx(r1.morph.vessel_density / (lambda * lambda)).epsilon(1e-9));
    CHECK(r2.morph.mean_diameter_um ==
          doctest::Approx(r1.morph.mean_diameter_um * lambda).epsilon(1e-9));
    CHECK(r2.morph.surface_area_mm2 ==
          doctest::Approx(r1.morph.surface_area_mm2 * lambda * lambda).epsilon(1e-9));
    CHECK(r2.morph.cycles == r1.morph.cycles);
    CHECK(r2.morph.components == r1.morph.components);
    CHECK(r2.circulatory_index == doctest::Approx(r1.circulatory_index).epsilon(1e-12));
}

TEST_CASE("quant report serialization carries the declared-absent field") {
    PhantomConfig cfg;
    cfg.depth = 1;
    cfg.seed = 2;
    auto g = generate_network(cfg);
    QuantOptions opt;
    opt.region_volume_mm3 = 1.0;
    opt.volume_id = "test-vol";
    auto rep = compute_quant(g, opt);
    auto j = quant_report_to_json(rep);
    CHECK(j.contains("vessel_opening_degree"));
    CHECK(j["vessel_opening_degree"].is_null());
    CHECK(j["provenance"]["volume_id"] == "test-vol");
    auto row = quant_report_csv_row(rep);
    CHECK(row.find("test-vol") == 0);
}

TEST_CASE("density is stable under grid refinement") {
    PhantomConfig cfg;
    cfg.depth = 3;
    cfg.seed = 401;
    auto g = generate_network(cfg);
    double region = cfg.region_mm.x * cfg.region_mm.y * cfg.region_mm.z;
    auto measure = [&](int64_t n, double s) {
        auto vol = rasterize(g, n, n, n, {s, s, s});
        auto filled = close_pinches(vol);
        auto skel = skeletonize(filled);
        auto depth = interior_depth_mm(filled);
        return analytic_properties(extract_graph(skel, depth), region).vessel_density;
    };
    double coarse = measure(128, 0.01);
    double fine = measure(256, 0.005);
    CHECK(std::abs(coarse - fine) / fine < 0.05);
}
