#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "vascufold/phantom/phantom.hpp"
#include "vascufold/phantom/rasterize.hpp"
#include "vascufold/srus/simulate.hpp"

using namespace vf;

namespace {

constexpr double kPi = 3.14159265358979323846;

VascularGraph tube(Vec3 a, Vec3 b, double r_um, Vec3 region) {
    VascularGraph g;
    g.nodes = {{0, a}, {1, b}};
    g.edges = {{0, 0, 1, {a, b}, {r_um, r_um}}};
    g.region_mm = region;
    return g;
}

}  // namespace

TEST_CASE("perpendicular tube: angle pi/2, direction sentinel 0") {
    // axis through pixel (32,32) center, along z
    auto g = tube({0.325, 0.325, 0.1}, {0.325, 0.325, 0.54}, 40.0, {0.64, 0.64, 0.64});
    auto vol = rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 1;
    plan.offset_mm = 0.325;
    plan.psf_sigma_px = 0.0;
    auto st = slice_stack(g, vol, plan);
    CHECK(st.channel(0, Channel::FlowAngle).at(32, 32) == doctest::Approx(kPi / 2).epsilon(1e-12));
    CHECK(st.channel(0, Channel::FlowDirection).at(32, 32) == 0.0);
    CHECK(st.channel(0, Channel::Grayscale).at(32, 32) == 1.0);
}

TEST_CASE("in-plane tube along +x: direction 0, angle 0") {
    auto g = tube({0.06, 0.325, 0.325}, {0.58, 0.325, 0.325}, 40.0, {0.64, 0.64, 0.64});
    auto vol = rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 1;
    plan.offset_mm = 0.325;
    plan.psf_sigma_px = 0.0;
    auto st = slice_stack(g, vol, plan);
    CHECK(st.channel(0, Channel::FlowDirection).at(32, 32) == doctest::Approx(0.0));
    CHECK(st.channel(0, Channel::FlowAngle).at(32, 32) == doctest::Approx(0.0));
    CHECK(st.channel(0, Channel::Grayscale).at(32, 32) == 1.0);
}

TEST_CASE("Poiseuille profile: velocity at r/2 is 0.75 of the peak") {
    auto g = tube({0.325, 0.325, 0.1}, {0.325, 0.325, 0.54}, 40.0, {0.64, 0.64, 0.64});
    auto vol = rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 1;
    plan.offset_mm = 0.325;
    auto st = slice_stack(g, vol, plan);
    double v_center = st.channel(0, Channel::FlowVelocity).at(32, 32);
    double v_half = st.channel(0, Channel::FlowVelocity).at(32, 34);  // 0.02 mm = r/2 away
    CHECK(v_center > 0.0);
    CHECK(v_half / v_center == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("direction and angle vanish outside the foreground") {
    PhantomConfig cfg;
    cfg.depth = 2;
    cfg.seed = 3;
    auto g = generate_network(cfg);
    auto vol = rasterize(g, 128, 128, 128, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 4;
    plan.spacing_mm = 0.3;
    plan.offset_mm = 0.2;
    plan.psf_sigma_px = 0.0;
    auto st = slice_stack(g, vol, plan);
    for (size_t s = 0; s < st.slices.size(); ++s) {
        const auto& gray = st.channel(s, Channel::Grayscale);
        const auto& dir = st.channel(s, Channel::FlowDirection);
        const auto& ang = st.channel(s, Channel::FlowAngle);
        for (int64_t i = 0; i < gray.size(); ++i)
            if (gray[i] == 0.0) {
                CHECK(dir[i] == 0.0);
                CHECK(ang[i] == 0.0);
            }
    }
}

TEST_CASE("plane outside the volume gives an empty flagged slice") {
    auto g = tube({0.325, 0.325, 0.1}, {0.325, 0.325, 0.54}, 40.0, {0.64, 0.64, 0.64});
    auto vol = rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 2;
    plan.offset_mm = 0.32;
    plan.spacing_mm = 1.0;  // second plane at 1.32 > 0.64
    auto st = slice_stack(g, vol, plan);
    CHECK(!st.slices[0].outside_volume);
    CHECK(st.slices[1].outside_volume);
    for (const auto& img : st.slices[1].channels)
        for (int64_t i = 0; i < img.size(); ++i) CHECK(img[i] == 0.0);
}

TEST_CASE("max projection of dense slices reproduces the volume projection") {
    PhantomConfig cfg;
    cfg.depth = 2;
    cfg.seed = 11;
    cfg.region_mm = {0.96, 0.96, 0.96};
    cfg.seg_len_min_mm = 0.15;
    cfg.seg_len_max_mm = 0.3;
    auto g = generate_network(cfg);
    auto vol = rasterize(g, 96, 96, 96, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 96;
    plan.spacing_mm = 0.01;
    plan.offset_mm = 0.005;  // voxel-plane centers
    plan.psf_sigma_px = 0.0;
    plan.channels = {Channel::Grayscale};
    auto st = slice_stack(g, vol, plan);

    int64_t inter = 0, uni = 0;
    for (int64_t y = 0; y < vol.ny; ++y)
        for (int64_t x = 0; x < vol.nx; ++x) {
            bool vol_hit = false;
            for (int64_t z = 0; z < vol.nz; ++z) vol_hit |= vol.at(z, y, x) != 0;
            bool st_hit = false;
            for (size_t s = 0; s < st.slices.size(); ++s)
                st_hit |= st.channel(s, Channel::Grayscale).at(y, x) > 0.5;
            inter += (vol_hit && st_hit);
            uni += (vol_hit || st_hit);
        }
    REQUIRE(uni > 0);
    CHECK(static_cast<double>(inter) / static_cast<double>(uni) >= 0.98);
}

TEST_CASE("corrupt with a zero config is the identity") {
    auto g = tube({0.325, 0.325, 0.1}, {0.325, 0.325, 0.54}, 40.0, {0.64, 0.64, 0.64});
    auto vol = rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 3;
    plan.offset_mm = 0.2;
    plan.spacing_mm = 0.1;
    auto st = slice_stack(g, vol, plan);
    DegradationConfig cfg;
    auto out = corrupt(st, cfg);
    REQUIRE(out.slices.size() == st.slices.size());
    for (size_t s = 0; s < st.slices.size(); ++s)
        for (size_t c = 0; c < st.channels.size(); ++c)
            CHECK(out.slices[s].channels[c] == st.slices[s].channels[c]);
}

TEST_CASE("corrupt is deterministic per seed and keeps the channel mask") {
    auto g = tube({0.325, 0.325, 0.1}, {0.325, 0.325, 0.54}, 40.0, {0.64, 0.64, 0.64});
    auto vol = rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 2;
    plan.offset_mm = 0.2;
    plan.spacing_mm = 0.1;
    auto st = slice_stack(g, vol, plan);
    DegradationConfig cfg;
    cfg.gaussian_sigma = 0.05;
    cfg.impulse_fraction = 0.02;
    cfg.jitter_bound_px = 2.0;
    cfg.seed = 9;
    auto a = corrupt(st, cfg);
    auto b = corrupt(st, cfg);
    CHECK(a.channels == st.channels);
    for (size_t s = 0; s < a.slices.size(); ++s)
        for (size_t c = 0; c < a.channels.size(); ++c)
            CHECK(a.slices[s].channels[c] == b.slices[s].channels[c]);
}

TEST_CASE("impulse corruption hits the expected pixel count") {
    SliceStack st;
    st.channels = {Channel::Grayscale};
    st.pixel_spacing_mm = 0.01;
    st.rows = 100;
    st.cols = 100;
    Slice sl;
    sl.pose = {{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}};
    sl.channels.emplace_back(Image({100, 100}, 0.5));  // impulses always differ from 0.5
    st.slices.push_back(std::move(sl));

    DegradationConfig cfg;
    cfg.impulse_fraction = 0.05;
    cfg.seed = 4;
    auto out = corrupt(st, cfg);
    int64_t diff = 0;
    const auto& a = st.channel(0, Channel::Grayscale);
    const auto& b = out.channel(0, Channel::Grayscale);
    for (int64_t i = 0; i < a.size(); ++i) diff += (a[i] != b[i]);
    CHECK(std::abs(static_cast<double>(diff) - 500.0) <= 3.0 * std::sqrt(500.0));
}

TEST_CASE("recorded jitter warp respects the displacement bound") {
    auto g = tube({0.325, 0.325, 0.1}, {0.325, 0.325, 0.54}, 40.0, {0.64, 0.64, 0.64});
    auto vol = rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 2;
    plan.offset_mm = 0.2;
    plan.spacing_mm = 0.1;
    auto st = slice_stack(g, vol, plan);
    DegradationConfig cfg;
    cfg.jitter_bound_px = 3.0;
    cfg.seed = 21;
    auto out = corrupt(st, cfg);
    for (const auto& sl : out.slices) {
        REQUIRE(sl.recorded_warp.has_value());
        for (int64_t r = 0; r < st.rows; r += 3)
            for (int64_t c = 0; c < st.cols; c += 3) {
                double dr, dc;
                sl.recorded_warp->displacement_at(r, c, &dr, &dc);
                CHECK(std::abs(dr) <= 3.0 + 1e-12);
                CHECK(std::abs(dc) <= 3.0 + 1e-12);
            }
    }
}

TEST_CASE("stack directory serialization round-trips") {
    auto g = tube({0.325, 0.325, 0.1}, {0.325, 0.325, 0.54}, 40.0, {0.64, 0.64, 0.64});
    auto vol = rasterize(g, 64, 64, 64, {0.01, 0.01, 0.01});
    SlicePlan plan;
    plan.count = 2;
    plan.offset_mm = 0.2;
    plan.spacing_mm = 0.1;
    auto st = slice_stack(g, vol, plan);
    DegradationConfig cfg;
    cfg.jitter_bound_px = 1.5;
    cfg.seed = 3;
    st = corrupt(st, cfg);

    auto dir = std::filesystem::temp_directory_path() / "vf_stack_rt";
    std::filesystem::remove_all(dir);
    save_stack(st, dir.string());
    auto st2 = load_stack(dir.string());
    CHECK(st2.channels == st.channels);
    CHECK(st2.rows == st.rows);
    CHECK(st2.slices.size() == st.slices.size());
    CHECK(st2.slices[0].recorded_warp.has_value());
    // float-quantized payloads are stable from the first save on
    auto dir2 = std::filesystem::temp_directory_path() / "vf_stack_rt2";
    std::filesystem::remove_all(dir2);
    save_stack(st2, dir2.string());
    auto st3 = load_stack(dir2.string());
    for (size_t s = 0; s < st2.slices.size(); ++s)
        for (size_t c = 0; c < st2.channels.size(); ++c)
            CHECK(st3.slices[s].channels[c] == st2.slices[s].channels[c]);
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}
