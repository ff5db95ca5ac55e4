#pragma once

#include <cstdint>
#include <vector>

#include "vascufold/core/vec3.hpp"
#include "vascufold/phantom/vascular_graph.hpp"

namespace vf {

struct PhantomConfig {
    Vec3 region_mm = {1.28, 1.28, 1.28};
    int depth = 3;                     // bifurcation levels below the root segment
    double branch_prob = 1.0;          // chance a branch tip bifurcates
    double murray_k = 3.0;             // radius decay exponent
    double root_radius_um = 50.0;
    double seg_len_min_mm = 0.22;
    double seg_len_max_mm = 0.42;
    double cone_half_angle_deg = 40.0; // child direction cone around parent tangent
    int loops = 0;                     // anastomoses inserted after growth
    int trees = 1;                     // independent root trees
    uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

struct GroundTruthParams {
    double vessel_density = 0.0;   // mm / mm^3
    double mean_diameter_um = 0.0;
    double surface_area_mm2 = 0.0;
    double mean_branch_angle_deg = 0.0;
    std::vector<double> branch_angles_deg;
    int components = 0;
    int cycles = 0;
    double total_length_mm = 0.0;
};

// Stochastic bifurcating trees with Murray-law radii, then `loops` extra
// edges between nearby leaves of the same tree. Deterministic per seed.
VascularGraph generate_network(const PhantomConfig& config);

GroundTruthParams analytic_properties(const VascularGraph& graph, double region_volume_mm3);

}  // namespace vf
