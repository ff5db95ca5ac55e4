#pragma once

#include "vascufold/srus/slice_stack.hpp"

namespace vf {

struct AugmentOps {
    double rotation_deg = 0.0;   // about the image center, in [-180, 180]
    double elastic_sigma_px = 0.0;
    double scale = 1.0;
    double noise_sigma = 0.0;    // additive Gaussian on the grayscale channel

    void validate() const;
};

// Geometric ops hit every channel of a slice identically; the in-plane flow
// direction channel additionally gets the rotation angle added (wrapped to
// [-pi, pi)) on foreground. Direction, angle and bubble channels resample
// nearest-neighbor, the smooth intensity channels bilinearly. Deterministic
// per seed.
SliceStack augment(const SliceStack& stack, const AugmentOps& ops, uint64_t seed);

}  // namespace vf
