#include "vascufold/quant/morphology.hpp"

#include <algorithm>

#include "vascufold/quant/edt.hpp"

namespace vf {

MaskVolume close_pinches(const MaskVolume& mask, double radius_voxels) {
    double s_min = std::min({mask.spacing_mm[0], mask.spacing_mm[1], mask.spacing_mm[2]});
    double rho = radius_voxels * s_min;
    double rho2 = rho * rho;

    // dilate: everything within rho of the foreground
    auto d_fg = distance_transform_sq(mask);
    MaskVolume dilated(mask.nz, mask.ny, mask.nx, mask.spacing_mm, 0);
    for (int64_t i = 0; i < mask.size(); ++i)
        dilated.data[i] = d_fg.data[i] <= rho2 ? 1 : 0;

    // erode back: keep what stays at least rho inside the dilated set
    MaskVolume dil_bg(mask.nz, mask.ny, mask.nx, mask.spacing_mm, 0);
    for (int64_t i = 0; i < mask.size(); ++i) dil_bg.data[i] = dilated.data[i] ? 0 : 1;
    auto d_bg = distance_transform_sq(dil_bg);
    MaskVolume closed(mask.nz, mask.ny, mask.nx, mask.spacing_mm, 0);
    for (int64_t i = 0; i < mask.size(); ++i)
        closed.data[i] = (mask.data[i] || d_bg.data[i] > rho2) ? 1 : 0;
    return closed;
}

}  // namespace vf
