#pragma once

#include <vector>

#include "vascufold/core/ndarray.hpp"
#include "vascufold/preprocess/bspline.hpp"

namespace vf {

// Reference estimator: hard-assignment joint histogram over min-max
// normalized intensities, MI = H(A) + H(B) - H(A,B) in nats.
double mutual_information(const Image& a, const Image& b, int bins = 32);

// Catmull-Rom interpolation with analytic spatial gradient; border clamped.
void catmull_rom_sample(const Image& img, double row, double col,
                        double* value, double* d_row, double* d_col);

// Differentiable Parzen-window MI (cubic B-spline kernels on both axes) of
// (fixed, moving o T). This is the registration objective; the histogram
// estimator above stays the reported reference.
class ParzenMi {
public:
    ParzenMi(const Image& fixed, const Image& moving, int bins = 32);

    double evaluate(const BSplineTransform& t) const;

    // gradient with respect to the control displacements (row then col),
    // matching central finite differences of evaluate()
    double evaluate_with_gradient(const BSplineTransform& t, std::vector<double>* grad_dy,
                                  std::vector<double>* grad_dx) const;

private:
    double run(const BSplineTransform& t, std::vector<double>* gy,
               std::vector<double>* gx) const;

    const Image& fixed_;
    const Image& moving_;
    int bins_;
    double f_lo_, f_scale_;  // intensity -> continuous bin coordinate
    double m_lo_, m_scale_;
};

}  // namespace vf
