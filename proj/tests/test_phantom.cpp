#include <doctest.h>

#include <cmath>
#include <map>

#include "vascufold/core/errors.hpp"
#include "vascufold/phantom/phantom.hpp"
#include "vascufold/phantom/rasterize.hpp"

using namespace vf;

namespace {

constexpr double kPi = 3.14159265358979323846;

// single straight tube along z: radius in um, length in mm
VascularGraph make_tube(double radius_um, double length_mm, Vec3 region) {
    VascularGraph g;
    Vec3 a = {region.x / 2, region.y / 2, (region.z - length_mm) / 2};
    Vec3 b = {region.x / 2, region.y / 2, (region.z + length_mm) / 2};
    g.nodes = {{0, a}, {1, b}};
    g.edges = {{0, 0, 1, {a, b}, {radius_um, radius_um}}};
    g.region_mm = region;
    return g;
}

std::map<int, int> node_degrees(const VascularGraph& g) {
    std::map<int, int> deg;
    for (const auto& n : g.nodes) deg[n.id] = 0;
    for (const auto& e : g.edges) {
        deg[e.a]++;
        deg[e.b]++;
    }
    return deg;
}

}  // namespace

TEST_CASE("depth 0 gives a single segment at the root radius") {
    PhantomConfig cfg;
    cfg.depth = 0;
    cfg.root_radius_um = 50.0;
    cfg.seed = 42;
    auto g = generate_network(cfg);
    CHECK(g.nodes.size() == 2);
    CHECK(g.edges.size() == 1);
    for (double r : g.edges[0].radius_um) CHECK(r == doctest::Approx(50.0));
}

TEST_CASE("generation is deterministic per seed") {
    PhantomConfig cfg;
    cfg.depth = 3;
    cfg.loops = 1;
    cfg.seed = 123;
    auto a = graph_to_json(generate_network(cfg));
    auto b = graph_to_json(generate_network(cfg));
    CHECK(a == b);
    cfg.seed = 124;
    CHECK(graph_to_json(generate_network(cfg)) != a);
}

TEST_CASE("full depth-3 tree has 8 leaves and no cycles") {
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        PhantomConfig cfg;
        cfg.depth = 3;
        cfg.branch_prob = 1.0;
        cfg.loops = 0;
        cfg.seed = seed;
        auto g = generate_network(cfg);
        auto deg = node_degrees(g);
        int leaves = 0;
        for (const auto& [id, d] : deg)
            if (d == 1 && id != 0) leaves++;  // node 0 is the inlet
        CHECK(leaves == 8);
        CHECK(g.cycles() == 0);
        CHECK(g.components() == 1);
    }
}

TEST_CASE("Murray radius conservation at every junction") {
    PhantomConfig cfg;
    cfg.depth = 4;
    cfg.seed = 9;
    cfg.murray_k = 3.0;
    auto g = generate_network(cfg);
    auto deg = node_degrees(g);
    int checked = 0;
    for (const auto& [id, d] : deg) {
        if (d != 3) continue;
        // parent edge carries the largest radius
        std::vector<double> radii;
        for (const auto& e : g.edges)
            if (e.a == id || e.b == id) radii.push_back(e.radius_um[0]);
        REQUIRE(radii.size() == 3);
        std::sort(radii.begin(), radii.end());
        double rp = radii[2];
        double lhs = std::pow(rp, cfg.murray_k);
        double rhs = std::pow(radii[0], cfg.murray_k) + std::pow(radii[1], cfg.murray_k);
        CHECK(std::abs(lhs - rhs) / lhs < 1e-9);
        checked++;
    }
    CHECK(checked > 0);
}

TEST_CASE("each inserted loop adds exactly one cycle") {
    for (int loops : {0, 1, 2, 3}) {
        PhantomConfig cfg;
        cfg.depth = 3;
        cfg.seed = 77;
        cfg.loops = loops;
        auto g = generate_network(cfg);
        CHECK(g.cycles() == loops);
        CHECK(g.components() == 1);
    }
}

TEST_CASE("multiple trees give multiple components") {
    PhantomConfig cfg;
    cfg.depth = 2;
    cfg.trees = 3;
    cfg.region_mm = {2.4, 1.0, 1.2};
    cfg.seg_len_min_mm = 0.15;
    cfg.seg_len_max_mm = 0.3;
    cfg.seed = 5;
    auto g = generate_network(cfg);
    CHECK(g.components() == 3);
    CHECK(g.cycles() == 0);
}

TEST_CASE("region too small for the root throws a config error") {
    PhantomConfig cfg;
    cfg.region_mm = {0.05, 0.05, 0.05};
    CHECK_THROWS_AS(generate_network(cfg), ConfigError);
}

TEST_CASE("graph JSON round-trip preserves everything") {
    PhantomConfig cfg;
    cfg.depth = 2;
    cfg.loops = 1;
    cfg.seed = 31;
    auto g = generate_network(cfg);
    auto g2 = graph_from_json(graph_to_json(g));
    CHECK(graph_to_json(g2) == graph_to_json(g));
}

TEST_CASE("analytic properties on forced cases") {
    SUBCASE("density is length over region volume") {
        auto g = make_tube(40.0, 1.0, {1.0, 1.0, 2.0});
        auto p = analytic_properties(g, 2.0);
        CHECK(p.vessel_density == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(p.total_length_mm == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("mean diameter is twice the radius") {
        auto g = make_tube(32.1, 1.0, {1.0, 1.0, 2.0});
        auto p = analytic_properties(g, 2.0);
        CHECK(p.mean_diameter_um == doctest::Approx(64.2).epsilon(1e-12));
    }
    SUBCASE("surface area of a cylinder") {
        auto g = make_tube(40.0, 1.0, {1.0, 1.0, 2.0});
        auto p = analytic_properties(g, 2.0);
        CHECK(p.surface_area_mm2 == doctest::Approx(2 * kPi * 0.04 * 1.0).epsilon(1e-12));
    }
    SUBCASE("orthogonal Y junction has a 90 degree branch angle") {
        VascularGraph g;
        Vec3 c = {1.0, 1.0, 1.0};
        Vec3 p0 = {1.0, 1.0, 0.2};
        Vec3 px = {1.8, 1.0, 1.0};
        Vec3 py = {1.0, 1.8, 1.0};
        g.nodes = {{0, p0}, {1, c}, {2, px}, {3, py}};
        g.edges = {{0, 0, 1, {p0, c}, {50, 50}},
                   {1, 1, 2, {c, px}, {30, 30}},
                   {2, 1, 3, {c, py}, {30, 30}}};
        g.region_mm = {2.0, 2.0, 2.0};
        auto p = analytic_properties(g, 8.0);
        REQUIRE(p.branch_angles_deg.size() == 1);
        CHECK(p.branch_angles_deg[0] == doctest::Approx(90.0).epsilon(1e-9));
    }
}

TEST_CASE("rasterized tube voxel count matches the analytic cylinder volume") {
    // axis aligned with a voxel-center column so digitization error stays small
    VascularGraph g;
    Vec3 a = {0.505, 0.505, 0.2};
    Vec3 b = {0.505, 0.505, 1.2};
    g.nodes = {{0, a}, {1, b}};
    g.edges = {{0, 0, 1, {a, b}, {40.0, 40.0}}};
    g.region_mm = {1.0, 1.0, 1.4};
    auto vol = rasterize(g, 140, 100, 100, {0.01, 0.01, 0.01});
    double count = static_cast<double>(count_foreground(vol));
    double expect = kPi * 4.0 * 4.0 * 100.0;  // ~5027 voxels
    CHECK(std::abs(count - expect) / expect < 0.05);
}

TEST_CASE("rasterize equals the brute-force point-in-capsule test") {
    PhantomConfig cfg;
    cfg.depth = 2;
    cfg.region_mm = {0.8, 0.8, 0.8};
    cfg.seg_len_min_mm = 0.12;
    cfg.seg_len_max_mm = 0.25;
    cfg.seed = 3;
    auto g = generate_network(cfg);
    auto fast = rasterize(g, 40, 40, 40, {0.02, 0.02, 0.02});
    auto slow = rasterize_bruteforce(g, 40, 40, 40, {0.02, 0.02, 0.02});
    CHECK(fast.data == slow.data);
}

TEST_CASE("empty graph rasterizes to all background") {
    VascularGraph g;
    g.region_mm = {1, 1, 1};
    auto vol = rasterize(g, 16, 16, 16, {0.0625, 0.0625, 0.0625});
    CHECK(count_foreground(vol) == 0);
}

TEST_CASE("foreground volume is stable under grid refinement") {
    auto g = make_tube(40.0, 1.0, {1.0, 1.0, 1.4});
    auto v1 = rasterize(g, 140, 100, 100, {0.01, 0.01, 0.01});
    auto v2 = rasterize(g, 280, 200, 200, {0.005, 0.005, 0.005});
    double vol1 = static_cast<double>(count_foreground(v1)) * v1.voxel_volume_mm3();
    double vol2 = static_cast<double>(count_foreground(v2)) * v2.voxel_volume_mm3();
    CHECK(std::abs(vol1 - vol2) / vol2 < 0.03);
}

TEST_CASE("rasterize against analytic volume on generated phantoms") {
    PhantomConfig cfg;
    cfg.depth = 3;
    cfg.seed = 21;
    auto g = generate_network(cfg);
    auto vol = rasterize(g, 128, 128, 128, {0.01, 0.01, 0.01});
    double voxels = static_cast<double>(count_foreground(vol)) * vol.voxel_volume_mm3();
    double analytic = 0.0;
    for (const auto& e : g.edges)
        for (size_t i = 1; i < e.poly.size(); ++i) {
            double l = norm(e.poly[i] - e.poly[i - 1]);
            double r = 0.5 * (e.radius_um[i] + e.radius_um[i - 1]) * 1e-3;
            analytic += kPi * r * r * l;
        }
    // overlap at junctions makes the voxel count land slightly below the
    // per-segment sum; 5% covers it at spacing <= radius/3
    CHECK(std::abs(voxels - analytic) / analytic < 0.05);
}

TEST_CASE("graph leaving the grid extent is rejected") {
    auto g = make_tube(40.0, 1.0, {1.0, 1.0, 1.4});
    CHECK_THROWS_AS(rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01}), ConfigError);
}
