#include "vascufold/eval/report.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "vascufold/core/errors.hpp"

namespace vf {

MaskVolume naive_extrusion_baseline(const SliceStack& stack, double threshold,
                                    int64_t out_d, const std::array<double, 3>& spacing_mm) {
    if (stack.channel_index(Channel::Grayscale) < 0)
        throw ConfigError("extrusion baseline: stack lacks the grayscale channel");
    if (stack.slices.empty()) throw ConfigError("extrusion baseline: empty stack");
    MaskVolume out(out_d, stack.rows, stack.cols, spacing_mm, 0);
    int64_t n_slices = static_cast<int64_t>(stack.slices.size());
    for (int64_t z = 0; z < out_d; ++z) {
        // each output plane copies its nearest slice
        int64_t s = n_slices * z / out_d;
        const Image& g = stack.channel(static_cast<size_t>(s), Channel::Grayscale);
        for (int64_t y = 0; y < out.ny; ++y)
            for (int64_t x = 0; x < out.nx; ++x)
                out.at(z, y, x) = g.at(y, x) >= threshold ? 1 : 0;
    }
    return out;
}

json metrics_report_to_json(const MetricsReport& r) {
    json j;
    j["case_id"] = r.case_id;
    j["method"] = r.method;
    j["dice"] = r.confusion.dice;
    j["sensitivity"] = r.confusion.sensitivity;
    j["specificity"] = r.confusion.specificity;
    j["accuracy"] = r.confusion.accuracy;
    j["ppv"] = r.confusion.ppv;
    j["npv"] = r.confusion.npv;
    j["counts"] = {{"tp", r.confusion.tp},
                   {"fp", r.confusion.fp},
                   {"tn", r.confusion.tn},
                   {"fn", r.confusion.fn}};
    j["flags"] = {{"dice_both_empty", r.confusion.dice_both_empty},
                  {"sensitivity_defined", r.confusion.sensitivity_defined},
                  {"specificity_defined", r.confusion.specificity_defined},
                  {"ppv_defined", r.confusion.ppv_defined},
                  {"npv_defined", r.confusion.npv_defined}};
    if (r.hausdorff.defined) {
        j["hausdorff_px"] = r.hausdorff.max_px;
        j["hd95_px"] = r.hausdorff.hd95_px;
        j["hausdorff_mm"] = r.hausdorff.max_mm;
        j["hd95_mm"] = r.hausdorff.hd95_mm;
    } else {
        j["hausdorff_px"] = "inf";
        j["hd95_px"] = "inf";
        j["hausdorff_mm"] = "inf";
        j["hd95_mm"] = "inf";
    }
    j["alpha"] = r.alpha;
    return j;
}

std::string metrics_report_csv_header() {
    return "case_id,method,dice,sensitivity,specificity,accuracy,ppv,npv,"
           "hausdorff_px,hd95_px,hausdorff_mm,hd95_mm,tp,fp,tn,fn";
}

std::string metrics_report_csv_row(const MetricsReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << r.case_id << "," << r.method << "," << r.confusion.dice << ","
       << r.confusion.sensitivity << "," << r.confusion.specificity << ","
       << r.confusion.accuracy << "," << r.confusion.ppv << "," << r.confusion.npv << ","
       << r.hausdorff.max_px << "," << r.hausdorff.hd95_px << "," << r.hausdorff.max_mm << ","
       << r.hausdorff.hd95_mm << "," << r.confusion.tp << "," << r.confusion.fp << ","
       << r.confusion.tn << "," << r.confusion.fn;
    return os.str();
}

FoldReport fold_improvement_report(
    const std::vector<std::string>& parameters,
    const std::map<std::string, double>& baseline_errors,
    const std::map<std::string, double>& comparator_errors) {
    FoldReport rep;
    double sum = 0.0, log_sum = 0.0;
    int finite = 0;
    for (const auto& p : parameters) {
        auto bi = baseline_errors.find(p);
        auto ci = comparator_errors.find(p);
        if (bi == baseline_errors.end() || ci == comparator_errors.end())
            throw ConfigError("fold report: missing error for parameter " + p);
        if (bi->second <= 0.0)
            throw ConfigError("fold report: baseline error must be positive for " + p);
        FoldEntry e;
        e.parameter = p;
        e.baseline_error = bi->second;
        e.comparator_error = ci->second;
        e.ratio = ci->second > 0.0 ? bi->second / ci->second
                                   : std::numeric_limits<double>::infinity();
        if (std::isfinite(e.ratio)) {
            sum += e.ratio;
            log_sum += std::log(e.ratio);
            finite++;
        }
        rep.entries.push_back(e);
    }
    if (finite > 0) {
        rep.arithmetic_mean = sum / finite;
        rep.geometric_mean = std::exp(log_sum / finite);
    }
    return rep;
}

json fold_report_to_json(const FoldReport& r) {
    json j;
    j["entries"] = json::array();
    for (const auto& e : r.entries) {
        json je;
        je["parameter"] = e.parameter;
        je["baseline_error"] = e.baseline_error;
        je["comparator_error"] = e.comparator_error;
        if (std::isfinite(e.ratio))
            je["fold_improvement"] = e.ratio;
        else
            je["fold_improvement"] = "inf";
        j["entries"].push_back(std::move(je));
    }
    j["arithmetic_mean"] = r.arithmetic_mean;
    j["geometric_mean"] = r.geometric_mean;
    return j;
}

std::string render_metrics_table(const std::vector<MetricsReport>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(24) << "Method" << std::right << std::setw(10) << "Dice"
       << std::setw(12) << "Sens" << std::setw(12) << "Spec" << std::setw(12) << "Acc"
       << std::setw(12) << "HD95(px)" << "\n";
    os << std::string(82, '-') << "\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& r : rows) {
        os << std::left << std::setw(24) << r.method << std::right << std::setw(10)
           << r.confusion.dice << std::setw(12) << r.confusion.sensitivity << std::setw(12)
           << r.confusion.specificity << std::setw(12) << r.confusion.accuracy;
        if (r.hausdorff.defined)
            os << std::setw(12) << r.hausdorff.hd95_px;
        else
            os << std::setw(12) << "inf";
        os << "\n";
    }
    return os.str();
}

}  // namespace vf
