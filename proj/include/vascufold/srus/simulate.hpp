#pragma once

#include "vascufold/core/volume.hpp"
#include "vascufold/phantom/vascular_graph.hpp"
#include "vascufold/srus/slice_stack.hpp"

namespace vf {

struct SlicePlan {
    int count = 8;
    double spacing_mm = 0.02;     // distance between consecutive planes
    double offset_mm = 0.005;     // first plane position along the normal
    double pixel_spacing_mm = 0;  // 0: inherit the volume's in-plane spacing
    double psf_sigma_px = 1.0;    // grayscale blur
    double bubble_step_mm = 0.004;     // candidate spacing along centerlines
    double bubble_probability = 0.35;  // Bernoulli keep rate per candidate
    double velocity_scale = 4000.0;    // v_max = scale * r_mm^2, in mm/s
    std::vector<Channel> channels = {Channel::Grayscale, Channel::FlowDensity,
                                     Channel::FlowDirection, Channel::FlowAngle,
                                     Channel::FlowVelocity, Channel::MicrobubbleTrack};
    uint64_t seed = 0;
};

struct DegradationConfig {
    double gaussian_sigma = 0.0;   // additive noise on grayscale
    double impulse_fraction = 0.0; // salt/pepper on grayscale
    double psf_sigma_px = 0.0;     // extra blur on grayscale
    double jitter_bound_px = 0.0;  // per-slice random B-spline warp, all channels
    double jitter_spacing_px = 16.0;
    uint64_t seed = 0;

    void validate() const;
    bool is_identity() const;
};

// Parallel axial slices through the phantom. Geometry channels are sampled
// from the graph itself (same point-in-capsule rule as the rasterizer);
// flow direction/angle come from the nearest centerline tangent and the
// velocity profile is Poiseuille, v(d) = v_max (1 - (d/r)^2).
SliceStack slice_stack(const VascularGraph& graph, const MaskVolume& volume,
                       const SlicePlan& plan);

// Deterministic degradation; the applied jitter warp is recorded on each
// slice so registration tests can score against the generating field.
SliceStack corrupt(const SliceStack& stack, const DegradationConfig& cfg);

Image gaussian_blur(const Image& img, double sigma_px);

}  // namespace vf
