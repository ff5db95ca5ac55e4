#pragma once

#include <optional>

#include "vascufold/core/volume.hpp"

namespace vf {

struct ConfusionMetrics {
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double dice = 0, sensitivity = 0, specificity = 0, accuracy = 0, ppv = 0, npv = 0;
    bool dice_both_empty = false;       // empty truth and empty pred: dice defined as 1
    bool sensitivity_defined = true;    // false when truth is empty
    bool specificity_defined = true;
    bool ppv_defined = true;
    bool npv_defined = true;
};

ConfusionMetrics confusion_metrics(const MaskVolume& pred, const MaskVolume& truth);

struct HausdorffResult {
    double max_px = 0, hd95_px = 0;
    double max_mm = 0, hd95_mm = 0;
    bool defined = true;  // false (infinite sentinel) when a mask is empty
};

// Exact symmetric Hausdorff over boundary voxels via distance transforms;
// hd95 is the max of the two directed 95th percentiles.
HausdorffResult hausdorff_distance(const MaskVolume& pred, const MaskVolume& truth);

// O(n^2) boundary oracle for the tests.
HausdorffResult hausdorff_bruteforce(const MaskVolume& pred, const MaskVolume& truth);

}  // namespace vf
