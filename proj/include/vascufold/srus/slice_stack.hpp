#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vascufold/core/ndarray.hpp"
#include "vascufold/core/vec3.hpp"
#include "vascufold/preprocess/bspline.hpp"

namespace vf {

enum class Channel : int {
    Grayscale = 0,
    FlowDensity,
    FlowDirection,
    FlowAngle,
    FlowVelocity,
    MicrobubbleTrack,
};
constexpr int kChannelCount = 6;

const char* channel_name(Channel c);
std::optional<Channel> channel_from_name(const std::string& name);

struct SlicePose {
    Vec3 origin;       // mm, world position of pixel (0,0) corner
    Vec3 normal;       // unit
    Vec3 u, v;         // in-plane basis, unit; pixel (r,c) center at
                       // origin + u*(c+.5)*ps + v*(r+.5)*ps
};

struct Slice {
    SlicePose pose;
    std::vector<Image> channels;  // parallel to SliceStack::channels
    bool outside_volume = false;
    std::optional<BSplineTransform> recorded_warp;  // jitter applied by corrupt
};

// Ordered multimodal 2D image set. All slices share pixel spacing, dims and
// channel presence.
struct SliceStack {
    std::vector<Channel> channels;
    double pixel_spacing_mm = 0.01;
    int64_t rows = 0, cols = 0;
    std::vector<Slice> slices;

    int channel_index(Channel c) const;  // -1 when absent
    const Image& channel(size_t slice, Channel c) const;
    Image& channel(size_t slice, Channel c);
    void validate() const;  // throws on invariant violations
};

// Directory layout: stack.json manifest + s{index}_{channel}.raw f32 payloads.
void save_stack(const SliceStack& s, const std::string& dir);
SliceStack load_stack(const std::string& dir);

}  // namespace vf
