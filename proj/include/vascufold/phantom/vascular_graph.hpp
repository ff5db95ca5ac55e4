#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vascufold/core/vec3.hpp"

namespace vf {

// Centerline network. Node positions and polyline vertices in mm, radii in um.
struct GraphNode {
    int id = 0;
    Vec3 p;
};

struct GraphEdge {
    int id = 0;
    int a = 0, b = 0;
    std::vector<Vec3> poly;         // first/last vertex == node a/b position
    std::vector<double> radius_um;  // one per polyline vertex
};

struct VascularGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    Vec3 region_mm;    // axis-aligned bounding box [0, region_mm]
    uint64_t seed = 0;

    const GraphNode& node(int id) const;
    double edge_length_mm(const GraphEdge& e) const;
    double total_length_mm() const;
    int components() const;
    int cycles() const;  // E - V + C

    // Throws InternalError when a structural invariant is broken (dangling
    // endpoint, nonpositive radius, vertex outside region, zero-length edge).
    void validate() const;
};

std::string graph_to_json(const VascularGraph& g);
VascularGraph graph_from_json(const std::string& text);
void save_graph(const VascularGraph& g, const std::string& path);
VascularGraph load_graph(const std::string& path);

}  // namespace vf
