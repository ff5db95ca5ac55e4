#include "vascufold/preprocess/filters.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/kernels.hpp"

namespace vf {

Image adaptive_median_filter(const Image& image, int max_kernel) {
    if (image.empty()) throw ShapeError("adaptive_median_filter: empty image");
    if (max_kernel < 3 || max_kernel % 2 == 0)
        throw ConfigError("adaptive_median_filter: max_kernel must be odd and >= 3");
    int64_t rows = image.dim(0), cols = image.dim(1);
    Image out = image;
    std::vector<double> window;
    window.reserve(static_cast<size_t>(max_kernel) * max_kernel);

    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < cols; ++c) {
            double z = image.at(r, c);
            for (int k = 3; k <= max_kernel; k += 2) {
                int h = k / 2;
                window.clear();
                for (int dr = -h; dr <= h; ++dr)
                    for (int dc = -h; dc <= h; ++dc) {
                        int64_t rr = std::clamp<int64_t>(r + dr, 0, rows - 1);
                        int64_t cc = std::clamp<int64_t>(c + dc, 0, cols - 1);
                        window.push_back(image.at(rr, cc));
                    }
                auto mid = window.begin() + static_cast<int64_t>(window.size()) / 2;
                std::nth_element(window.begin(), mid, window.end());
                double zmed = *mid;
                double zmin = *std::min_element(window.begin(), window.end());
                double zmax = *std::max_element(window.begin(), window.end());
                bool at_min = z <= zmin, at_max = z >= zmax;
                if (!at_min && !at_max) break;  // not an extreme, keep
                if ((at_max && zmed < zmax) || (at_min && zmed > zmin)) {
                    // impulse: the pixel sits at an extreme the median avoids
                    out.at(r, c) = zmed;
                    break;
                }
                // median saturated at the same extreme: grow if allowed
            }
        }
    }
    return out;
}

Image anisotropic_diffusion(const Image& image, int iterations, double kappa, double lambda) {
    if (image.empty()) throw ShapeError("anisotropic_diffusion: empty image");
    if (!(lambda > 0.0 && lambda <= 0.25))
        throw ConfigError("anisotropic_diffusion: lambda must be in (0, 0.25]");
    if (kappa <= 0.0) throw ConfigError("anisotropic_diffusion: kappa must be positive");

    int64_t rows = image.dim(0), cols = image.dim(1);
    Image cur = image;
    Image fe({rows, cols}), fs({rows, cols});
    const double inv_k2 = 1.0 / (kappa * kappa);

    for (int it = 0; it < iterations; ++it) {
        // fluxes from a snapshot; east flux at (r,c) flows (r,c) <- (r,c+1)
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < cols; ++c) {
                double de = c + 1 < cols ? cur.at(r, c + 1) - cur.at(r, c) : 0.0;
                double ds = r + 1 < rows ? cur.at(r + 1, c) - cur.at(r, c) : 0.0;
                fe.at(r, c) = std::exp(-de * de * inv_k2) * de;
                fs.at(r, c) = std::exp(-ds * ds * inv_k2) * ds;
            }
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < cols; ++c) {
                double div = fe.at(r, c) + fs.at(r, c);
                if (c > 0) div -= fe.at(r, c - 1);
                if (r > 0) div -= fs.at(r - 1, c);
                cur.at(r, c) += lambda * div;
            }
    }
    return cur;
}

double snr_gain_db(const Image& clean, const Image& noisy, const Image& denoised) {
    require_same_dims(clean, noisy, "snr_gain");
    require_same_dims(clean, denoised, "snr_gain");
    double num = 0.0, den = 0.0;
    for (int64_t i = 0; i < clean.size(); ++i) {
        double rn = noisy[i] - clean[i];
        double rd = denoised[i] - clean[i];
        num += rn * rn;
        den += rd * rd;
    }
    if (den == 0.0) return 99.0;
    if (num == 0.0) return -99.0;
    return std::clamp(10.0 * std::log10(num / den), -99.0, 99.0);
}

ZScoreResult zscore_normalize(const Image& image) {
    ZScoreResult res{Image(image.dims()), false};
    int64_t n = image.size();
    if (n == 0) {
        res.degenerate = true;
        return res;
    }
    double mean = kernels::sum(image.data(), static_cast<size_t>(n)) / static_cast<double>(n);
    double var = 0.0;
    for (int64_t i = 0; i < n; ++i) var += (image[i] - mean) * (image[i] - mean);
    var /= static_cast<double>(n);
    double sd = std::sqrt(var);
    if (sd < 1e-12 * (std::abs(mean) + 1.0)) {
        res.degenerate = true;  // constant image maps to all zeros
        return res;
    }
    for (int64_t i = 0; i < n; ++i) res.image[i] = (image[i] - mean) / sd;
    return res;
}

}  // namespace vf
