#include "vascufold/srus/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/rng.hpp"

namespace vf {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Capsule {
    Vec3 a, b;
    double ra, rb;  // mm
    double zmin, zmax;
};

std::vector<Capsule> collect(const VascularGraph& g) {
    std::vector<Capsule> out;
    for (const auto& e : g.edges)
        for (size_t i = 1; i < e.poly.size(); ++i) {
            Capsule c{e.poly[i - 1], e.poly[i], e.radius_um[i - 1] * 1e-3,
                      e.radius_um[i] * 1e-3, 0, 0};
            double rmax = std::max(c.ra, c.rb);
            c.zmin = std::min(c.a.z, c.b.z) - rmax;
            c.zmax = std::max(c.a.z, c.b.z) + rmax;
            out.push_back(c);
        }
    return out;
}

// canonical tangent: prefer positive component along the plane normal, then
// along u, then v; polyline direction is arbitrary
Vec3 canonical_tangent(const Capsule& c, const SlicePose& pose) {
    Vec3 t = normalized(c.b - c.a);
    double dn = dot(t, pose.normal);
    if (dn < -1e-12) return -t;
    if (dn > 1e-12) return t;
    double du = dot(t, pose.u);
    if (du < -1e-12) return -t;
    if (du > 1e-12) return t;
    return dot(t, pose.v) >= 0 ? t : -t;
}

}  // namespace

void DegradationConfig::validate() const {
    if (gaussian_sigma < 0) throw ConfigError("degradation.gaussian_sigma must be >= 0");
    if (impulse_fraction < 0 || impulse_fraction > 1)
        throw ConfigError("degradation.impulse_fraction must be in [0,1]");
    if (psf_sigma_px < 0) throw ConfigError("degradation.psf_sigma_px must be >= 0");
    if (jitter_bound_px < 0) throw ConfigError("degradation.jitter_bound_px must be >= 0");
    if (jitter_spacing_px < 4) throw ConfigError("degradation.jitter_spacing_px must be >= 4");
}

bool DegradationConfig::is_identity() const {
    return gaussian_sigma == 0 && impulse_fraction == 0 && psf_sigma_px == 0 &&
           jitter_bound_px == 0;
}

Image gaussian_blur(const Image& img, double sigma_px) {
    if (sigma_px <= 0) return img;
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_px)));
    std::vector<double> kern(static_cast<size_t>(2 * radius + 1));
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        kern[static_cast<size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma_px * sigma_px));
        sum += kern[static_cast<size_t>(i + radius)];
    }
    for (auto& k : kern) k /= sum;

    int64_t rows = img.dim(0), cols = img.dim(1);
    Image tmp({rows, cols}), out({rows, cols});
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                int64_t cc = std::clamp<int64_t>(c + i, 0, cols - 1);
                acc += kern[static_cast<size_t>(i + radius)] * img.at(r, cc);
            }
            tmp.at(r, c) = acc;
        }
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                int64_t rr = std::clamp<int64_t>(r + i, 0, rows - 1);
                acc += kern[static_cast<size_t>(i + radius)] * tmp.at(rr, c);
            }
            out.at(r, c) = acc;
        }
    return out;
}

SliceStack slice_stack(const VascularGraph& graph, const MaskVolume& volume,
                       const SlicePlan& plan) {
    if (plan.count < 1) throw ConfigError("slice plan: count must be >= 1");
    if (plan.channels.empty()) throw ConfigError("slice plan: channel set is empty");

    SliceStack stack;
    stack.channels = plan.channels;
    stack.pixel_spacing_mm =
        plan.pixel_spacing_mm > 0 ? plan.pixel_spacing_mm : volume.spacing_mm[2];
    stack.rows = volume.ny;
    stack.cols = volume.nx;

    const double ps = stack.pixel_spacing_mm;
    const double zmax_vol = volume.nz * volume.spacing_mm[0];
    auto capsules = collect(graph);

    for (int k = 0; k < plan.count; ++k) {
        Slice sl;
        double z = plan.offset_mm + k * plan.spacing_mm;
        sl.pose.origin = {0, 0, z};
        sl.pose.normal = {0, 0, 1};
        sl.pose.u = {1, 0, 0};
        sl.pose.v = {0, 1, 0};
        for (size_t ci = 0; ci < plan.channels.size(); ++ci)
            sl.channels.emplace_back(Image({stack.rows, stack.cols}));

        if (z < 0 || z > zmax_vol) {
            sl.outside_volume = true;
            stack.slices.push_back(std::move(sl));
            continue;
        }

        // capsules whose extent crosses this plane
        std::vector<const Capsule*> near;
        for (const auto& c : capsules)
            if (z >= c.zmin && z <= c.zmax) near.push_back(&c);

        Image occupancy({stack.rows, stack.cols});
        int gray_i = stack.channel_index(Channel::Grayscale);
        int dens_i = stack.channel_index(Channel::FlowDensity);
        int dir_i = stack.channel_index(Channel::FlowDirection);
        int ang_i = stack.channel_index(Channel::FlowAngle);
        int vel_i = stack.channel_index(Channel::FlowVelocity);
        int bub_i = stack.channel_index(Channel::MicrobubbleTrack);

        for (int64_t r = 0; r < stack.rows; ++r) {
            for (int64_t c = 0; c < stack.cols; ++c) {
                Vec3 p = sl.pose.origin + sl.pose.u * ((c + 0.5) * ps) +
                         sl.pose.v * ((r + 0.5) * ps);
                // deepest capsule at p decides the local tangent and radius
                const Capsule* best = nullptr;
                double best_depth = 0.0, best_d = 0.0, best_r = 0.0;
                for (const Capsule* cap : near) {
                    double t;
                    double d2 = point_segment_dist2(p, cap->a, cap->b, &t);
                    double rr = cap->ra + t * (cap->rb - cap->ra);
                    double d = std::sqrt(d2);
                    if (d <= rr && rr - d > best_depth) {
                        best_depth = rr - d;
                        best = cap;
                        best_d = d;
                        best_r = rr;
                    }
                }
                if (best) {
                    occupancy.at(r, c) = 1.0;
                    Vec3 t = canonical_tangent(*best, sl.pose);
                    double dn = std::clamp(dot(t, sl.pose.normal), -1.0, 1.0);
                    if (dir_i >= 0) {
                        double in_u = dot(t, sl.pose.u), in_v = dot(t, sl.pose.v);
                        sl.channels[dir_i].at(r, c) =
                            (1.0 - std::abs(dn) < 1e-9) ? 0.0 : std::atan2(in_v, in_u);
                    }
                    if (ang_i >= 0) sl.channels[ang_i].at(r, c) = std::asin(dn);
                    if (vel_i >= 0) {
                        double vmax = plan.velocity_scale * best_r * best_r;
                        double frac = best_d / best_r;
                        sl.channels[vel_i].at(r, c) = vmax * (1.0 - frac * frac);
                    }
                }
                if (dens_i >= 0) {
                    // occupancy fraction over a 4x4 subpixel footprint
                    int hits = 0;
                    for (int sr = 0; sr < 4; ++sr)
                        for (int sc = 0; sc < 4; ++sc) {
                            Vec3 q = sl.pose.origin +
                                     sl.pose.u * ((c + (sc + 0.5) / 4.0) * ps) +
                                     sl.pose.v * ((r + (sr + 0.5) / 4.0) * ps);
                            for (const Capsule* cap : near) {
                                double t;
                                double d2 = point_segment_dist2(q, cap->a, cap->b, &t);
                                double rr = cap->ra + t * (cap->rb - cap->ra);
                                if (d2 <= rr * rr) {
                                    hits++;
                                    break;
                                }
                            }
                        }
                    sl.channels[dens_i].at(r, c) = hits / 16.0;
                }
            }
        }

        if (gray_i >= 0) sl.channels[gray_i] = gaussian_blur(occupancy, plan.psf_sigma_px);

        if (bub_i >= 0) {
            // Bernoulli-sampled points along in-plane centerline crossings
            Rng rng(plan.seed ^ static_cast<uint64_t>(k));
            Image& bub = sl.channels[bub_i];
            for (const auto& c : capsules) {
                double rmax = std::max(c.ra, c.rb);
                if (z < c.zmin || z > c.zmax) continue;
                double len = norm(c.b - c.a);
                int steps = std::max(1, static_cast<int>(len / plan.bubble_step_mm));
                for (int s = 0; s <= steps; ++s) {
                    double t = static_cast<double>(s) / steps;
                    Vec3 q = c.a + (c.b - c.a) * t;
                    double rr = c.ra + t * (c.rb - c.ra);
                    if (std::abs(q.z - z) > std::min(rr, rmax)) continue;
                    if (rng.uniform() >= plan.bubble_probability) continue;
                    int64_t col = static_cast<int64_t>(std::floor(q.x / ps));
                    int64_t row = static_cast<int64_t>(std::floor(q.y / ps));
                    if (row >= 0 && row < stack.rows && col >= 0 && col < stack.cols)
                        bub.at(row, col) = 1.0;
                }
            }
        }
        stack.slices.push_back(std::move(sl));
    }
    stack.validate();
    return stack;
}

SliceStack corrupt(const SliceStack& stack, const DegradationConfig& cfg) {
    cfg.validate();
    if (cfg.is_identity()) return stack;

    SliceStack out = stack;
    for (size_t i = 0; i < out.slices.size(); ++i) {
        Rng rng(derive_seed(cfg.seed, "corrupt", i));
        Slice& sl = out.slices[i];
        int gray_i = out.channel_index(Channel::Grayscale);

        if (gray_i >= 0) {
            Image& g = sl.channels[static_cast<size_t>(gray_i)];
            if (cfg.psf_sigma_px > 0) g = gaussian_blur(g, cfg.psf_sigma_px);
            if (cfg.gaussian_sigma > 0)
                for (int64_t p = 0; p < g.size(); ++p) g[p] += rng.normal(0.0, cfg.gaussian_sigma);
            if (cfg.impulse_fraction > 0)
                for (int64_t p = 0; p < g.size(); ++p)
                    if (rng.uniform() < cfg.impulse_fraction)
                        g[p] = rng.uniform() < 0.5 ? 0.0 : 1.0;
        }

        if (cfg.jitter_bound_px > 0) {
            auto warp = BSplineTransform::identity(out.rows, out.cols, cfg.jitter_spacing_px);
            for (int64_t p = 0; p < warp.size(); ++p) {
                warp.dy[static_cast<size_t>(p)] =
                    rng.uniform(-cfg.jitter_bound_px, cfg.jitter_bound_px);
                warp.dx[static_cast<size_t>(p)] =
                    rng.uniform(-cfg.jitter_bound_px, cfg.jitter_bound_px);
            }
            for (auto& img : sl.channels) img = apply_transform(img, warp);
            sl.recorded_warp = warp;
        }
    }
    return out;
}

}  // namespace vf
