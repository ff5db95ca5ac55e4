#include "vascufold/preprocess/registration.hpp"

#include <algorithm>
#include <cmath>

#include "vascufold/core/errors.hpp"
#include "vascufold/preprocess/mutual_information.hpp"

namespace vf {
namespace {

Image downsample2(const Image& img) {
    int64_t rows = img.dim(0) / 2, cols = img.dim(1) / 2;
    Image out({rows, cols});
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c)
            out.at(r, c) = 0.25 * (img.at(2 * r, 2 * c) + img.at(2 * r, 2 * c + 1) +
                                   img.at(2 * r + 1, 2 * c) + img.at(2 * r + 1, 2 * c + 1));
    return out;
}

// membrane energy over lattice 4-neighbor first differences, both components
double membrane_energy(const BSplineTransform& t, std::vector<double>* gy,
                       std::vector<double>* gx) {
    double e = 0.0;
    auto accum = [&](const std::vector<double>& d, std::vector<double>* g) {
        for (int64_t r = 0; r < t.rows_c; ++r)
            for (int64_t c = 0; c < t.cols_c; ++c) {
                size_t i = static_cast<size_t>(r * t.cols_c + c);
                if (c + 1 < t.cols_c) {
                    double diff = d[i] - d[i + 1];
                    e += diff * diff;
                    if (g) {
                        (*g)[i] += 2.0 * diff;
                        (*g)[i + 1] -= 2.0 * diff;
                    }
                }
                if (r + 1 < t.rows_c) {
                    size_t j = i + static_cast<size_t>(t.cols_c);
                    double diff = d[i] - d[j];
                    e += diff * diff;
                    if (g) {
                        (*g)[i] += 2.0 * diff;
                        (*g)[j] -= 2.0 * diff;
                    }
                }
            }
    };
    accum(t.dy, gy);
    accum(t.dx, gx);
    return e;
}

}  // namespace

void landmark_tre(const BSplineTransform& estimated, const BSplineTransform& generating,
                  int64_t rows, int64_t cols, int grid_n, double* mean, double* sd,
                  double* maxv) {
    double sum = 0.0, sum2 = 0.0, mx = 0.0;
    int n = 0;
    for (int i = 1; i <= grid_n; ++i) {
        for (int j = 1; j <= grid_n; ++j) {
            double r = rows * static_cast<double>(i) / (grid_n + 1);
            double c = cols * static_cast<double>(j) / (grid_n + 1);
            double er, ec, tr, tc;
            estimated.displacement_at(r, c, &er, &ec);
            generating.displacement_at(r + er, c + ec, &tr, &tc);
            double dr = er + tr, dc = ec + tc;
            double d = std::sqrt(dr * dr + dc * dc);
            sum += d;
            sum2 += d * d;
            mx = std::max(mx, d);
            n++;
        }
    }
    *mean = sum / n;
    *sd = std::sqrt(std::max(0.0, sum2 / n - (sum / n) * (sum / n)));
    *maxv = mx;
}

RegistrationResult bspline_register(const Image& moving, const Image& fixed,
                                    const RegistrationOptions& opts,
                                    const BSplineTransform* generating_warp,
                                    int landmark_grid) {
    require_same_dims(moving, fixed, "bspline_register");
    if (opts.levels < 1) throw ConfigError("bspline_register: levels must be >= 1");
    double coarse_spacing = opts.lattice_spacing_px / (1 << (opts.levels - 1));
    if (coarse_spacing < 4.0)
        throw ConfigError("bspline_register: lattice spacing below 4 px at the coarsest level");

    const int64_t rows = fixed.dim(0), cols = fixed.dim(1);

    // image pyramids, index 0 = coarsest
    std::vector<Image> fpyr{fixed}, mpyr{moving};
    for (int l = 1; l < opts.levels; ++l) {
        fpyr.push_back(downsample2(fpyr.back()));
        mpyr.push_back(downsample2(mpyr.back()));
    }
    std::reverse(fpyr.begin(), fpyr.end());
    std::reverse(mpyr.begin(), mpyr.end());

    RegistrationResult res;
    res.identity_mi = mutual_information(moving, fixed, opts.bins);

    // one lattice, sized at full resolution; spacing and displacements scale
    // with the level
    BSplineTransform t = BSplineTransform::identity(rows, cols, opts.lattice_spacing_px);
    t.spacing_px = opts.lattice_spacing_px / (1 << (opts.levels - 1));
    for (auto& v : t.dy) v = 0.0;

    int iterations = 0;
    bool ran_out = false;
    int per_level_budget = (opts.max_iterations + opts.levels - 1) / opts.levels;
    for (int level = 0; level < opts.levels; ++level) {
        if (level > 0) {
            // finer level: pixel units halve
            t.spacing_px *= 2.0;
            for (auto& v : t.dy) v *= 2.0;
            for (auto& v : t.dx) v *= 2.0;
        }
        ParzenMi objective(fpyr[static_cast<size_t>(level)], mpyr[static_cast<size_t>(level)],
                           opts.bins);
        const double lam = opts.smoothness_weight;
        auto value_of = [&](const BSplineTransform& tr) {
            return objective.evaluate(tr) - lam * membrane_energy(tr, nullptr, nullptr);
        };
        auto value_grad = [&](const BSplineTransform& tr, std::vector<double>* gy,
                              std::vector<double>* gx) {
            double v = objective.evaluate_with_gradient(tr, gy, gx);
            std::vector<double> py(gy->size(), 0.0), px0(gx->size(), 0.0);
            double pen = membrane_energy(tr, &py, &px0);
            for (size_t i = 0; i < gy->size(); ++i) {
                (*gy)[i] -= lam * py[i];
                (*gx)[i] -= lam * px0[i];
            }
            return v - lam * pen;
        };

        BSplineTransform level_start = t;
        double step = opts.initial_step_px;
        std::vector<double> gy, gx;
        double cur = value_grad(t, &gy, &gx);
        int level_iters = 0;
        int tiny_streak = 0;
        bool plateaued = false;
        while (iterations < opts.max_iterations && level_iters < per_level_budget) {
            double gmax = 0.0;
            for (size_t i = 0; i < gy.size(); ++i)
                gmax = std::max({gmax, std::abs(gy[i]), std::abs(gx[i])});
            if (gmax < 1e-14) {
                plateaued = true;
                break;
            }

            bool accepted = false;
            while (step >= opts.min_step_px) {
                BSplineTransform cand = t;
                double s = step / gmax;
                for (size_t i = 0; i < gy.size(); ++i) {
                    cand.dy[i] += s * gy[i];
                    cand.dx[i] += s * gx[i];
                }
                double cand_v = value_of(cand);
                if (cand_v > cur + 1e-14) {
                    tiny_streak = cand_v - cur < 1e-6 ? tiny_streak + 1 : 0;
                    t = std::move(cand);
                    cur = cand_v;
                    accepted = true;
                    iterations++;
                    level_iters++;
                    step = std::min(step * 1.5, opts.initial_step_px * 4.0);
                    break;
                }
                step *= 0.5;
            }
            if (!accepted || tiny_streak >= 3) {
                plateaued = true;
                break;
            }
            cur = value_grad(t, &gy, &gx);
        }
        ran_out = iterations >= opts.max_iterations && !plateaued;

        // reported metric at full resolution after this level; a level that
        // lowered the reference metric is reverted so the sequence stays
        // nondecreasing
        double f = static_cast<double>(1 << (opts.levels - 1 - level));
        auto full_mi = [&](const BSplineTransform& tr) {
            BSplineTransform t_full = tr;
            t_full.spacing_px *= f;
            for (auto& v : t_full.dy) v *= f;
            for (auto& v : t_full.dx) v *= f;
            return mutual_information(apply_transform(moving, t_full), fixed, opts.bins);
        };
        double lvl_mi = full_mi(t);
        if (!res.level_mi.empty() && lvl_mi < res.level_mi.back()) {
            t = std::move(level_start);
            lvl_mi = res.level_mi.back();
        }
        res.level_mi.push_back(lvl_mi);
    }

    res.transform = t;
    res.iterations = iterations;
    res.final_mi = mutual_information(apply_transform(moving, t), fixed, opts.bins);
    res.converged = !ran_out;
    if (res.final_mi < res.identity_mi - 1e-9) {
        // the reference metric must never end below the identity start
        res.transform = BSplineTransform::identity(rows, cols, opts.lattice_spacing_px);
        res.final_mi = res.identity_mi;
        res.converged = false;
    }
    if (generating_warp)
        landmark_tre(res.transform, *generating_warp, rows, cols, landmark_grid,
                     &res.tre_mean_px, &res.tre_sd_px, &res.tre_max_px);
    return res;
}

}  // namespace vf
