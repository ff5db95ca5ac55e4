#pragma once

#include "vascufold/core/ndarray.hpp"

namespace vf {

// Impulse-detecting adaptive median, fixed 3x3 by default. A pixel equal to
// the window min/max while the median is strictly between them is replaced
// by the median; everything else passes through. The window grows (up to
// max_kernel, odd) only when the median itself saturates.
Image adaptive_median_filter(const Image& image, int max_kernel = 3);

// Perona-Malik explicit scheme, 4-neighbor fluxes, conduction
// g(d) = exp(-(d/kappa)^2), Neumann boundaries. Flux form, so total
// intensity is conserved to rounding. lambda must lie in (0, 0.25].
Image anisotropic_diffusion(const Image& image, int iterations, double kappa, double lambda);

// SNR improvement of `denoised` over `noisy` against the clean reference:
// 10 log10( sum (noisy-clean)^2 / sum (denoised-clean)^2 ), clamped to
// +-99 dB when a residual vanishes.
double snr_gain_db(const Image& clean, const Image& noisy, const Image& denoised);

struct ZScoreResult {
    Image image;
    bool degenerate = false;  // constant input; output is all zeros
};

// Zero-mean, unit population-std normalization.
ZScoreResult zscore_normalize(const Image& image);

}  // namespace vf
