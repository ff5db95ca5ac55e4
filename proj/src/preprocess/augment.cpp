#include "vascufold/preprocess/augment.hpp"

#include <cmath>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/rng.hpp"

namespace vf {
namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
    while (a >= kPi) a -= 2.0 * kPi;
    while (a < -kPi) a += 2.0 * kPi;
    return a;
}

bool nearest_channel(Channel c) {
    return c == Channel::FlowDirection || c == Channel::FlowAngle ||
           c == Channel::MicrobubbleTrack;
}

}  // namespace

void AugmentOps::validate() const {
    if (rotation_deg < -180.0 || rotation_deg > 180.0)
        throw ConfigError("augment.rotation_deg must be in [-180, 180]");
    if (scale <= 0.0) throw ConfigError("augment.scale must be positive");
    if (elastic_sigma_px < 0.0) throw ConfigError("augment.elastic_sigma_px must be >= 0");
    if (noise_sigma < 0.0) throw ConfigError("augment.noise_sigma must be >= 0");
}

SliceStack augment(const SliceStack& stack, const AugmentOps& ops, uint64_t seed) {
    ops.validate();
    bool identity_geom = ops.rotation_deg == 0.0 && ops.elastic_sigma_px == 0.0 &&
                         ops.scale == 1.0;
    if (identity_geom && ops.noise_sigma == 0.0) return stack;

    SliceStack out = stack;
    const int64_t rows = stack.rows, cols = stack.cols;
    const double cy = (rows - 1) / 2.0, cx = (cols - 1) / 2.0;
    const double theta = ops.rotation_deg * kPi / 180.0;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    int dir_i = stack.channel_index(Channel::FlowDirection);
    int dens_i = stack.channel_index(Channel::FlowDensity);
    int gray_i = stack.channel_index(Channel::Grayscale);

    for (size_t s = 0; s < stack.slices.size(); ++s) {
        Rng rng(derive_seed(seed, "augment", s));
        std::optional<BSplineTransform> elastic;
        if (ops.elastic_sigma_px > 0.0) {
            auto w = BSplineTransform::identity(rows, cols, 16.0);
            for (int64_t i = 0; i < w.size(); ++i) {
                w.dy[static_cast<size_t>(i)] = rng.normal(0.0, ops.elastic_sigma_px);
                w.dx[static_cast<size_t>(i)] = rng.normal(0.0, ops.elastic_sigma_px);
            }
            elastic = std::move(w);
        }

        // pull-back map shared by every channel of this slice
        auto source_of = [&](double r, double c, double* sr, double* sc) {
            double pr = r, pc = c;
            if (elastic) {
                double dr, dc;
                elastic->displacement_at(pr, pc, &dr, &dc);
                pr += dr;
                pc += dc;
            }
            // inverse of scale-then-rotate about the center
            double yr = (pr - cy) / ops.scale, xc = (pc - cx) / ops.scale;
            *sr = cy + cos_t * yr + sin_t * xc;
            *sc = cx - sin_t * yr + cos_t * xc;
        };

        if (!identity_geom) {
            for (size_t ci = 0; ci < stack.channels.size(); ++ci) {
                const Image& src = stack.slices[s].channels[ci];
                Image& dst = out.slices[s].channels[ci];
                bool nn = nearest_channel(stack.channels[ci]);
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t c = 0; c < cols; ++c) {
                        double sr, sc;
                        source_of(static_cast<double>(r), static_cast<double>(c), &sr, &sc);
                        if (nn) {
                            int64_t rr = static_cast<int64_t>(std::lround(sr));
                            int64_t cc = static_cast<int64_t>(std::lround(sc));
                            dst.at(r, c) = (rr >= 0 && rr < rows && cc >= 0 && cc < cols)
                                               ? src.at(rr, cc)
                                               : 0.0;
                        } else {
                            int64_t r0 = static_cast<int64_t>(std::floor(sr));
                            int64_t c0 = static_cast<int64_t>(std::floor(sc));
                            double fr = sr - r0, fc = sc - c0;
                            auto sample = [&](int64_t a, int64_t b) {
                                return (a >= 0 && a < rows && b >= 0 && b < cols) ? src.at(a, b)
                                                                                   : 0.0;
                            };
                            dst.at(r, c) =
                                (1 - fr) * ((1 - fc) * sample(r0, c0) + fc * sample(r0, c0 + 1)) +
                                fr * ((1 - fc) * sample(r0 + 1, c0) + fc * sample(r0 + 1, c0 + 1));
                        }
                    }
            }
            // rotating the content turns the in-plane flow vectors with it
            if (dir_i >= 0 && theta != 0.0) {
                Image& dir = out.slices[s].channels[static_cast<size_t>(dir_i)];
                const Image* mask = nullptr;
                if (dens_i >= 0)
                    mask = &out.slices[s].channels[static_cast<size_t>(dens_i)];
                else if (gray_i >= 0)
                    mask = &out.slices[s].channels[static_cast<size_t>(gray_i)];
                for (int64_t i = 0; i < dir.size(); ++i) {
                    bool fg = mask ? (*mask)[i] > 1e-6 : dir[i] != 0.0;
                    if (fg) dir[i] = wrap_angle(dir[i] + theta);
                }
            }
        }

        if (ops.noise_sigma > 0.0 && gray_i >= 0) {
            Image& g = out.slices[s].channels[static_cast<size_t>(gray_i)];
            for (int64_t i = 0; i < g.size(); ++i) g[i] += rng.normal(0.0, ops.noise_sigma);
        }
    }
    return out;
}

}  // namespace vf
