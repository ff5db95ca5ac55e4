#pragma once

#include <cstdint>
#include <vector>

#include "vascufold/core/io.hpp"
#include "vascufold/core/ndarray.hpp"

namespace vf {

// Cubic free-form deformation on a regular control lattice. Control point
// (i,j) sits at ((i-1)*spacing, (j-1)*spacing) px, so the lattice covers the
// image domain plus a one-cell margin on every side. Displacements in px.
struct BSplineTransform {
    int64_t rows_c = 0, cols_c = 0;
    double spacing_px = 16.0;
    std::vector<double> dy, dx;  // row-major [rows_c * cols_c]

    static BSplineTransform identity(int64_t img_rows, int64_t img_cols, double spacing_px);

    // required lattice size for an image extent
    static int64_t control_count(int64_t extent, double spacing_px);

    int64_t size() const { return rows_c * cols_c; }

    // cubic B-spline interpolated displacement at a pixel position
    void displacement_at(double row, double col, double* drow, double* dcol) const;

    json to_json() const;
    static BSplineTransform from_json(const json& j);
};

// Pull-back warp: out(p) = in(p + d(p)), bilinear intensity sampling,
// out-of-domain samples read as 0.
Image apply_transform(const Image& image, const BSplineTransform& t);

// cubic B-spline basis, u in [0,1)
inline void bspline_weights(double u, double w[4]) {
    double u2 = u * u, u3 = u2 * u;
    w[0] = (1.0 - 3.0 * u + 3.0 * u2 - u3) / 6.0;
    w[1] = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
    w[2] = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
    w[3] = u3 / 6.0;
}

inline void bspline_weights_d(double u, double w[4]) {
    double u2 = u * u;
    w[0] = -(1.0 - u) * (1.0 - u) / 2.0;
    w[1] = (3.0 * u2 - 4.0 * u) / 2.0;
    w[2] = (-3.0 * u2 + 2.0 * u + 1.0) / 2.0;
    w[3] = u2 / 2.0;
}

}  // namespace vf
