#include "vascufold/preprocess/bspline.hpp"

#include <cmath>

#include "vascufold/core/errors.hpp"

namespace vf {

int64_t BSplineTransform::control_count(int64_t extent, double spacing_px) {
    return static_cast<int64_t>(std::floor((extent - 1) / spacing_px)) + 4;
}

BSplineTransform BSplineTransform::identity(int64_t img_rows, int64_t img_cols,
                                            double spacing_px) {
    if (spacing_px < 4.0) throw ConfigError("BSplineTransform: lattice spacing must be >= 4 px");
    BSplineTransform t;
    t.spacing_px = spacing_px;
    t.rows_c = control_count(img_rows, spacing_px);
    t.cols_c = control_count(img_cols, spacing_px);
    t.dy.assign(static_cast<size_t>(t.rows_c * t.cols_c), 0.0);
    t.dx.assign(static_cast<size_t>(t.rows_c * t.cols_c), 0.0);
    return t;
}

void BSplineTransform::displacement_at(double row, double col, double* drow, double* dcol) const {
    double tr = row / spacing_px;
    double tc = col / spacing_px;
    int64_t br = static_cast<int64_t>(std::floor(tr));
    int64_t bc = static_cast<int64_t>(std::floor(tc));
    double wr[4], wc[4];
    bspline_weights(tr - br, wr);
    bspline_weights(tc - bc, wc);
    double sy = 0.0, sx = 0.0;
    for (int m = 0; m < 4; ++m) {
        int64_t r = br + m;  // storage offset: lattice index -1 lives at row 0
        if (r < 0 || r >= rows_c) continue;
        for (int n = 0; n < 4; ++n) {
            int64_t c = bc + n;
            if (c < 0 || c >= cols_c) continue;
            double w = wr[m] * wc[n];
            sy += w * dy[static_cast<size_t>(r * cols_c + c)];
            sx += w * dx[static_cast<size_t>(r * cols_c + c)];
        }
    }
    *drow = sy;
    *dcol = sx;
}

json BSplineTransform::to_json() const {
    json j;
    j["lattice_dims"] = {rows_c, cols_c};
    j["spacing_px"] = spacing_px;
    j["dy"] = dy;
    j["dx"] = dx;
    return j;
}

BSplineTransform BSplineTransform::from_json(const json& j) {
    BSplineTransform t;
    auto dims = j.at("lattice_dims").get<std::vector<int64_t>>();
    t.rows_c = dims.at(0);
    t.cols_c = dims.at(1);
    t.spacing_px = j.at("spacing_px").get<double>();
    t.dy = j.at("dy").get<std::vector<double>>();
    t.dx = j.at("dx").get<std::vector<double>>();
    if (static_cast<int64_t>(t.dy.size()) != t.size() ||
        static_cast<int64_t>(t.dx.size()) != t.size())
        throw ConfigError("BSplineTransform: displacement list does not match lattice dims");
    return t;
}

Image apply_transform(const Image& image, const BSplineTransform& t) {
    int64_t rows = image.dim(0), cols = image.dim(1);
    Image out({rows, cols});
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c) {
            double dr, dc;
            t.displacement_at(static_cast<double>(r), static_cast<double>(c), &dr, &dc);
            double sr = r + dr, sc = c + dc;
            int64_t r0 = static_cast<int64_t>(std::floor(sr));
            int64_t c0 = static_cast<int64_t>(std::floor(sc));
            double fr = sr - r0, fc = sc - c0;
            auto sample = [&](int64_t rr, int64_t cc) {
                return (rr >= 0 && rr < rows && cc >= 0 && cc < cols) ? image.at(rr, cc) : 0.0;
            };
            out.at(r, c) = (1 - fr) * ((1 - fc) * sample(r0, c0) + fc * sample(r0, c0 + 1)) +
                           fr * ((1 - fc) * sample(r0 + 1, c0) + fc * sample(r0 + 1, c0 + 1));
        }
    return out;
}

}  // namespace vf
