#include "vascufold/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vascufold/core/errors.hpp"
#include "vascufold/quant/edt.hpp"

namespace vf {

ConfusionMetrics confusion_metrics(const MaskVolume& pred, const MaskVolume& truth) {
    if (!pred.same_grid(truth)) throw ShapeError("confusion_metrics: grids differ");
    ConfusionMetrics m;
    for (int64_t i = 0; i < pred.size(); ++i) {
        bool p = pred.data[static_cast<size_t>(i)] != 0;
        bool t = truth.data[static_cast<size_t>(i)] != 0;
        m.tp += p && t;
        m.fp += p && !t;
        m.fn += !p && t;
        m.tn += !p && !t;
    }
    int64_t total = pred.size();
    if (m.tp + m.fp + m.fn == 0) {
        m.dice = 1.0;  // both masks empty
        m.dice_both_empty = true;
    } else {
        m.dice = 2.0 * m.tp / static_cast<double>(2 * m.tp + m.fp + m.fn);
    }
    m.sensitivity_defined = m.tp + m.fn > 0;
    m.sensitivity = m.sensitivity_defined ? m.tp / static_cast<double>(m.tp + m.fn) : 0.0;
    m.specificity_defined = m.tn + m.fp > 0;
    m.specificity = m.specificity_defined ? m.tn / static_cast<double>(m.tn + m.fp) : 0.0;
    m.accuracy = (m.tp + m.tn) / static_cast<double>(total);
    m.ppv_defined = m.tp + m.fp > 0;
    m.ppv = m.ppv_defined ? m.tp / static_cast<double>(m.tp + m.fp) : 0.0;
    m.npv_defined = m.tn + m.fn > 0;
    m.npv = m.npv_defined ? m.tn / static_cast<double>(m.tn + m.fn) : 0.0;
    return m;
}

namespace {

// boundary voxel: foreground with a 6-neighbor outside the mask
MaskVolume boundary_of(const MaskVolume& m) {
    MaskVolume b(m.nz, m.ny, m.nx, m.spacing_mm, 0);
    static const int d[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    for (int64_t z = 0; z < m.nz; ++z)
        for (int64_t y = 0; y < m.ny; ++y)
            for (int64_t x = 0; x < m.nx; ++x) {
                if (!m.at(z, y, x)) continue;
                for (auto& o : d) {
                    int64_t zz = z + o[0], yy = y + o[1], xx = x + o[2];
                    if (!m.in_bounds(zz, yy, xx) || !m.at(zz, yy, xx)) {
                        b.at(z, y, x) = 1;
                        break;
                    }
                }
            }
    return b;
}

double percentile95(std::vector<double>& v) {
    if (v.empty()) return 0.0;
    size_t k = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(v.size()))) - 1;
    k = std::min(k, v.size() - 1);
    std::nth_element(v.begin(), v.begin() + static_cast<int64_t>(k), v.end());
    return v[k];
}

}  // namespace

HausdorffResult hausdorff_distance(const MaskVolume& pred, const MaskVolume& truth) {
    if (!pred.same_grid(truth)) throw ShapeError("hausdorff: grids differ");
    HausdorffResult r;
    if (count_foreground(pred) == 0 || count_foreground(truth) == 0) {
        r.defined = false;
        r.max_px = r.hd95_px = r.max_mm = r.hd95_mm =
            std::numeric_limits<double>::infinity();
        return r;
    }
    MaskVolume bp = boundary_of(pred), bt = boundary_of(truth);
    auto dp = distance_transform_sq(bp);  // mm^2 to pred boundary
    auto dt = distance_transform_sq(bt);

    std::vector<double> d_pred_to_truth, d_truth_to_pred;
    for (int64_t i = 0; i < bp.size(); ++i) {
        if (bp.data[static_cast<size_t>(i)]) d_pred_to_truth.push_back(std::sqrt(dt.data[static_cast<size_t>(i)]));
        if (bt.data[static_cast<size_t>(i)]) d_truth_to_pred.push_back(std::sqrt(dp.data[static_cast<size_t>(i)]));
    }
    double m1 = *std::max_element(d_pred_to_truth.begin(), d_pred_to_truth.end());
    double m2 = *std::max_element(d_truth_to_pred.begin(), d_truth_to_pred.end());
    r.max_mm = std::max(m1, m2);
    r.hd95_mm = std::max(percentile95(d_pred_to_truth), percentile95(d_truth_to_pred));
    // px figures use the mean spacing; mm is the primary unit
    double s = (pred.spacing_mm[0] + pred.spacing_mm[1] + pred.spacing_mm[2]) / 3.0;
    r.max_px = r.max_mm / s;
    r.hd95_px = r.hd95_mm / s;
    return r;
}

HausdorffResult hausdorff_bruteforce(const MaskVolume& pred, const MaskVolume& truth) {
    if (!pred.same_grid(truth)) throw ShapeError("hausdorff: grids differ");
    HausdorffResult r;
    MaskVolume bp = boundary_of(pred), bt = boundary_of(truth);
    std::vector<Vec3> pa, pb;
    for (int64_t z = 0; z < bp.nz; ++z)
        for (int64_t y = 0; y < bp.ny; ++y)
            for (int64_t x = 0; x < bp.nx; ++x) {
                if (bp.at(z, y, x)) pa.push_back(bp.voxel_center(z, y, x));
                if (bt.at(z, y, x)) pb.push_back(bt.voxel_center(z, y, x));
            }
    if (pa.empty() || pb.empty()) {
        r.defined = false;
        r.max_px = r.hd95_px = r.max_mm = r.hd95_mm =
            std::numeric_limits<double>::infinity();
        return r;
    }
    auto directed = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        std::vector<double> ds;
        ds.reserve(from.size());
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) best = std::min(best, norm2(p - q));
            ds.push_back(std::sqrt(best));
        }
        return ds;
    };
    auto d1 = directed(pa, pb), d2 = directed(pb, pa);
    r.max_mm = std::max(*std::max_element(d1.begin(), d1.end()),
                        *std::max_element(d2.begin(), d2.end()));
    r.hd95_mm = std::max(percentile95(d1), percentile95(d2));
    double s = (pred.spacing_mm[0] + pred.spacing_mm[1] + pred.spacing_mm[2]) / 3.0;
    r.max_px = r.max_mm / s;
    r.hd95_px = r.hd95_mm / s;
    return r;
}

}  // namespace vf
