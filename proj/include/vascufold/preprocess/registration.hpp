#pragma once

#include <optional>

#include "vascufold/core/ndarray.hpp"
#include "vascufold/preprocess/bspline.hpp"

namespace vf {

struct RegistrationOptions {
    double lattice_spacing_px = 16.0;  // at full resolution; must stay >= 4 at the coarsest level
    int max_iterations = 150;          // accepted ascent steps, all levels together
    int levels = 3;
    int bins = 32;
    double initial_step_px = 2.0;
    double min_step_px = 5e-3;
    // membrane penalty on lattice first differences; keeps the field from
    // overfitting histogram noise, costs nothing for rigid shifts
    double smoothness_weight = 2e-2;
};

struct RegistrationResult {
    BSplineTransform transform;
    double final_mi = 0.0;      // histogram MI of (moving o T, fixed) at full res
    double identity_mi = 0.0;   // histogram MI before registration
    int iterations = 0;
    bool converged = false;
    std::vector<double> level_mi;  // full-res histogram MI after each level
    double tre_mean_px = -1.0;  // filled when the generating warp is supplied
    double tre_sd_px = -1.0;
    double tre_max_px = -1.0;
};

// Coarse-to-fine gradient ascent on Parzen MI over a cubic B-spline
// deformation. One control lattice serves every pyramid level: image
// coordinates and lattice spacing scale together, displacements are carried
// across levels in the finer level's pixels.
RegistrationResult bspline_register(const Image& moving, const Image& fixed,
                                    const RegistrationOptions& opts = {},
                                    const BSplineTransform* generating_warp = nullptr,
                                    int landmark_grid = 5);

// Residual |u_est(x) + u_true(x + u_est(x))| statistics over a regular
// landmark grid: the distance between registered and true correspondences.
void landmark_tre(const BSplineTransform& estimated, const BSplineTransform& generating,
                  int64_t rows, int64_t cols, int grid_n, double* mean, double* sd,
                  double* maxv);

}  // namespace vf
