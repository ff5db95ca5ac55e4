#pragma once

#include <map>
#include <string>
#include <vector>

#include "vascufold/core/io.hpp"
#include "vascufold/eval/metrics.hpp"
#include "vascufold/eval/stats.hpp"
#include "vascufold/srus/slice_stack.hpp"

namespace vf {

// Thresholds each slice's grayscale and stamps it across its share of the
// volume depth; deliberately no 3D reasoning. One slice fills everything.
MaskVolume naive_extrusion_baseline(const SliceStack& stack, double threshold,
                                    int64_t out_d, const std::array<double, 3>& spacing_mm);

struct MetricsReport {
    ConfusionMetrics confusion;
    HausdorffResult hausdorff;
    double alpha = 0.05;
    std::string case_id;
    std::string method;
};

json metrics_report_to_json(const MetricsReport& r);
std::string metrics_report_csv_header();
std::string metrics_report_csv_row(const MetricsReport& r);

struct FoldEntry {
    std::string parameter;
    double baseline_error = 0.0;
    double comparator_error = 0.0;
    double ratio = 0.0;  // baseline / comparator; inf sentinel on zero comparator
};

struct FoldReport {
    std::vector<FoldEntry> entries;
    double arithmetic_mean = 0.0;
    double geometric_mean = 0.0;
};

// ratio table of per-parameter error magnitudes, baseline over comparator
FoldReport fold_improvement_report(
    const std::vector<std::string>& parameters,
    const std::map<std::string, double>& baseline_errors,
    const std::map<std::string, double>& comparator_errors);

json fold_report_to_json(const FoldReport& r);

// aligned plain-text method x metric table
std::string render_metrics_table(const std::vector<MetricsReport>& rows);

}  // namespace vf
