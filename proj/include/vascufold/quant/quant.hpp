#pragma once

#include <array>
#include <optional>
#include <string>

#include "vascufold/core/io.hpp"
#include "vascufold/phantom/phantom.hpp"
#include "vascufold/phantom/vascular_graph.hpp"

namespace vf {

struct QuantOptions {
    double region_volume_mm3 = 0.0;
    std::optional<int> inlet_node;
    std::optional<int> outlet_node;
    double viscosity_pa_s = 3.5e-3;  // blood at high shear
    std::string volume_id;
    std::array<double, 3> spacing_mm = {0, 0, 0};
};

struct QuantReport {
    GroundTruthParams morph;  // density, diameter, surface, angles, topology

    // indices with no standard definition; the ones used here are declared
    double branching_heterogeneity = 0.0;  // CV of junction degrees
    bool heterogeneity_defined = false;    // needs at least one junction
    double circulatory_index = 0.0;        // cycles / edges

    bool resistance_requested = false;
    bool inlet_outlet_connected = false;
    double network_resistance = 0.0;  // Pa*s/mm^3; inf sentinel when disconnected
    double perfusion_index = 0.0;     // (1/R) / region volume
    double solve_residual = 0.0;      // inf-norm relative residual of the node balance

    std::string volume_id;
    std::array<double, 3> spacing_mm = {0, 0, 0};
};

// Morphological, topological, and hemodynamic parameters of a centerline
// graph. Poiseuille segment conductances g = pi r^4 / (8 mu l) assembled
// into a node balance with a unit pressure drop inlet -> outlet.
QuantReport compute_quant(const VascularGraph& graph, const QuantOptions& opts);

json quant_report_to_json(const QuantReport& r);
std::string quant_report_csv_header();
std::string quant_report_csv_row(const QuantReport& r);

}  // namespace vf
