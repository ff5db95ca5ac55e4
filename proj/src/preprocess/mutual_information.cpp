#include "vascufold/preprocess/mutual_information.hpp"

#include <algorithm>
#include <cmath>

#include "vascufold/core/errors.hpp"

namespace vf {
namespace {

// cubic B-spline kernel, support (-2, 2)
inline double beta3(double t) {
    double a = std::abs(t);
    if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    if (a < 2.0) {
        double s = 2.0 - a;
        return s * s * s / 6.0;
    }
    return 0.0;
}

inline double beta3_d(double t) {
    double a = std::abs(t);
    double g;
    if (a < 1.0)
        g = -2.0 * a + 1.5 * a * a;
    else if (a < 2.0)
        g = -0.5 * (2.0 - a) * (2.0 - a);
    else
        return 0.0;
    return t < 0.0 ? -g : g;
}

void min_max(const Image& img, double* lo, double* hi) {
    *lo = img[0];
    *hi = img[0];
    for (int64_t i = 1; i < img.size(); ++i) {
        *lo = std::min(*lo, img[i]);
        *hi = std::max(*hi, img[i]);
    }
}

}  // namespace

double mutual_information(const Image& a, const Image& b, int bins) {
    require_same_dims(a, b, "mutual_information");
    if (bins < 2) throw ConfigError("mutual_information: bins must be >= 2");
    double alo, ahi, blo, bhi;
    min_max(a, &alo, &ahi);
    min_max(b, &blo, &bhi);
    double ascale = ahi > alo ? 1.0 / (ahi - alo) : 0.0;
    double bscale = bhi > blo ? 1.0 / (bhi - blo) : 0.0;

    std::vector<double> joint(static_cast<size_t>(bins) * bins, 0.0);
    int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) {
        int ia = std::min(bins - 1, static_cast<int>((a[i] - alo) * ascale * bins));
        int ib = std::min(bins - 1, static_cast<int>((b[i] - blo) * bscale * bins));
        joint[static_cast<size_t>(ia) * bins + ib] += 1.0;
    }
    std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            double p = joint[static_cast<size_t>(i) * bins + j] / static_cast<double>(n);
            pa[static_cast<size_t>(i)] += p;
            pb[static_cast<size_t>(j)] += p;
        }
    double mi = 0.0;
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            double p = joint[static_cast<size_t>(i) * bins + j] / static_cast<double>(n);
            if (p > 0.0) mi += p * std::log(p / (pa[static_cast<size_t>(i)] * pb[static_cast<size_t>(j)]));
        }
    return std::max(mi, 0.0);
}

void catmull_rom_sample(const Image& img, double row, double col,
                        double* value, double* d_row, double* d_col) {
    int64_t rows = img.dim(0), cols = img.dim(1);
    int64_t r0 = static_cast<int64_t>(std::floor(row));
    int64_t c0 = static_cast<int64_t>(std::floor(col));
    double fr = row - r0, fc = col - c0;

    auto weights = [](double t, double w[4]) {
        w[0] = ((-0.5 * t + 1.0) * t - 0.5) * t;
        w[1] = (1.5 * t - 2.5) * t * t + 1.0;
        w[2] = ((-1.5 * t + 2.0) * t + 0.5) * t;
        w[3] = (0.5 * t - 0.5) * t * t;
    };
    auto weights_d = [](double t, double w[4]) {
        w[0] = (-1.5 * t + 2.0) * t - 0.5;
        w[1] = (4.5 * t - 5.0) * t;
        w[2] = (-4.5 * t + 4.0) * t + 0.5;
        w[3] = (1.5 * t - 1.0) * t;
    };
    double wr[4], wc[4], dwr[4], dwc[4];
    weights(fr, wr);
    weights(fc, wc);
    weights_d(fr, dwr);
    weights_d(fc, dwc);

    double v = 0, dr = 0, dc = 0;
    for (int m = 0; m < 4; ++m) {
        int64_t rr = std::clamp<int64_t>(r0 - 1 + m, 0, rows - 1);
        for (int nn = 0; nn < 4; ++nn) {
            int64_t cc = std::clamp<int64_t>(c0 - 1 + nn, 0, cols - 1);
            double s = img.at(rr, cc);
            v += wr[m] * wc[nn] * s;
            dr += dwr[m] * wc[nn] * s;
            dc += wr[m] * dwc[nn] * s;
        }
    }
    *value = v;
    if (d_row) *d_row = dr;
    if (d_col) *d_col = dc;
}

ParzenMi::ParzenMi(const Image& fixed, const Image& moving, int bins)
    : fixed_(fixed), moving_(moving), bins_(bins) {
    require_same_dims(fixed, moving, "ParzenMi");
    if (bins < 8) throw ConfigError("ParzenMi: bins must be >= 8");
    double lo, hi;
    min_max(fixed, &lo, &hi);
    f_lo_ = lo;
    f_scale_ = hi > lo ? (bins - 3.0) / (hi - lo) : 0.0;
    min_max(moving, &lo, &hi);
    m_lo_ = lo;
    m_scale_ = hi > lo ? (bins - 3.0) / (hi - lo) : 0.0;
}

double ParzenMi::evaluate(const BSplineTransform& t) const { return run(t, nullptr, nullptr); }

double ParzenMi::evaluate_with_gradient(const BSplineTransform& t, std::vector<double>* gy,
                                        std::vector<double>* gx) const {
    gy->assign(static_cast<size_t>(t.size()), 0.0);
    gx->assign(static_cast<size_t>(t.size()), 0.0);
    return run(t, gy, gx);
}

double ParzenMi::run(const BSplineTransform& t, std::vector<double>* gy,
                     std::vector<double>* gx) const {
    const int64_t rows = fixed_.dim(0), cols = fixed_.dim(1);
    const int B = bins_;
    const int64_t n = rows * cols;
    std::vector<double> joint(static_cast<size_t>(B) * B, 0.0);

    // pixel scratch reused by the gradient pass
    struct PixelBins {
        float cf, cm;     // continuous bin coordinates
        float gr, gc;     // moving-image spatial gradient at the warped point
    };
    std::vector<PixelBins> px;
    if (gy) px.resize(static_cast<size_t>(n));

    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < cols; ++c) {
            double dr, dc;
            t.displacement_at(static_cast<double>(r), static_cast<double>(c), &dr, &dc);
            double mv, mgr, mgc;
            catmull_rom_sample(moving_, r + dr, c + dc, &mv, &mgr, &mgc);

            double cf = 1.0 + (fixed_.at(r, c) - f_lo_) * f_scale_;
            double cm = 1.0 + (mv - m_lo_) * m_scale_;
            cf = std::clamp(cf, 1.0, B - 2.0);
            cm = std::clamp(cm, 1.0, B - 2.0);
            if (gy) px[static_cast<size_t>(r * cols + c)] = {
                static_cast<float>(cf), static_cast<float>(cm),
                static_cast<float>(mgr), static_cast<float>(mgc)};

            int kf = static_cast<int>(std::floor(cf));
            int km = static_cast<int>(std::floor(cm));
            for (int i = -1; i <= 2; ++i) {
                double wf = beta3(kf + i - cf);
                if (wf == 0.0) continue;
                double* row_p = &joint[static_cast<size_t>(kf + i) * B];
                for (int j = -1; j <= 2; ++j) row_p[km + j] += wf * beta3(km + j - cm);
            }
        }
    }

    std::vector<double> pf(B, 0.0), pm(B, 0.0);
    double inv_n = 1.0 / static_cast<double>(n);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < B; ++j) {
            joint[static_cast<size_t>(i) * B + j] *= inv_n;
            pf[static_cast<size_t>(i)] += joint[static_cast<size_t>(i) * B + j];
            pm[static_cast<size_t>(j)] += joint[static_cast<size_t>(i) * B + j];
        }

    double mi = 0.0;
    std::vector<double> log_ratio(static_cast<size_t>(B) * B, 0.0);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < B; ++j) {
            double p = joint[static_cast<size_t>(i) * B + j];
            if (p > 1e-300) {
                double lr = std::log(p / (pf[static_cast<size_t>(i)] * pm[static_cast<size_t>(j)]));
                log_ratio[static_cast<size_t>(i) * B + j] = lr;
                mi += p * lr;
            }
        }
    if (!gy) return mi;

    // gradient pass: alpha(x) = dMI/dm(x), then chain through the moving
    // image gradient and the lattice weights
    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < cols; ++c) {
            const PixelBins& pb = px[static_cast<size_t>(r * cols + c)];
            double cf = pb.cf, cm = pb.cm;
            int kf = static_cast<int>(std::floor(cf));
            int km = static_cast<int>(std::floor(cm));
            double d_dcm = 0.0;
            for (int i = -1; i <= 2; ++i) {
                double wf = beta3(kf + i - cf);
                if (wf == 0.0) continue;
                const double* lr_row = &log_ratio[static_cast<size_t>(kf + i) * B];
                double acc = 0.0;
                for (int j = -1; j <= 2; ++j) acc += beta3_d(km + j - cm) * lr_row[km + j];
                d_dcm += wf * acc;
            }
            // d beta3(l - cm)/d cm = -beta3'(l - cm)
            double alpha = -inv_n * d_dcm * m_scale_;
            if (alpha == 0.0) continue;
            double a_row = alpha * pb.gr;
            double a_col = alpha * pb.gc;

            double tr = r / t.spacing_px, tc = c / t.spacing_px;
            int64_t br = static_cast<int64_t>(std::floor(tr));
            int64_t bc = static_cast<int64_t>(std::floor(tc));
            double wr[4], wc[4];
            bspline_weights(tr - br, wr);
            bspline_weights(tc - bc, wc);
            for (int m = 0; m < 4; ++m) {
                int64_t rr = br + m;
                if (rr < 0 || rr >= t.rows_c) continue;
                for (int nn = 0; nn < 4; ++nn) {
                    int64_t cc = bc + nn;
                    if (cc < 0 || cc >= t.cols_c) continue;
                    double w = wr[m] * wc[nn];
                    (*gy)[static_cast<size_t>(rr * t.cols_c + cc)] += w * a_row;
                    (*gx)[static_cast<size_t>(rr * t.cols_c + cc)] += w * a_col;
                }
            }
        }
    }
    return mi;
}

}  // namespace vf
