#include "vascufold/quant/quant.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "vascufold/core/errors.hpp"

namespace vf {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

// series sum of per-segment Poiseuille resistances along the polyline
double edge_resistance(const VascularGraph& g, const GraphEdge& e, double mu) {
    (void)g;
    double r_total = 0.0;
    for (size_t i = 1; i < e.poly.size(); ++i) {
        double l = norm(e.poly[i] - e.poly[i - 1]);
        if (l <= 0.0) continue;
        double r_mm = 0.5 * (e.radius_um[i] + e.radius_um[i - 1]) * 1e-3;
        r_total += 8.0 * mu * l / (kPi * r_mm * r_mm * r_mm * r_mm);
    }
    return r_total;
}

// dense SPD Cholesky solve; returns false when a pivot collapses
bool cholesky_solve(std::vector<double>& a, std::vector<double>& x, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= a[i * n + k] * x[k];
        x[i] = s / a[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n; ++k) s -= a[k * n + i] * x[k];
        x[i] = s / a[i * n + i];
    }
    return true;
}

struct FlowResult {
    bool connected = false;
    double resistance = kInf;
    double residual = 0.0;
};

FlowResult solve_network(const VascularGraph& g, int inlet, int outlet, double mu) {
    FlowResult out;
    std::unordered_map<int, int> idx;
    for (size_t i = 0; i < g.nodes.size(); ++i) idx[g.nodes[i].id] = static_cast<int>(i);
    if (!idx.count(inlet) || !idx.count(outlet))
        throw ConfigError("compute_quant: inlet/outlet node id not in graph");

    int n = static_cast<int>(g.nodes.size());
    std::vector<std::map<int, double>> cond(n);  // sparse Laplacian off-diagonals
    for (const auto& e : g.edges) {
        if (e.a == e.b) continue;
        double r = edge_resistance(g, e, mu);
        if (r <= 0.0) continue;
        double gcond = 1.0 / r;
        int ia = idx[e.a], ib = idx[e.b];
        cond[ia][ib] += gcond;
        cond[ib][ia] += gcond;
    }

    // connectivity from inlet
    std::vector<int> reach(n, 0);
    std::vector<int> stack = {idx[inlet]};
    reach[idx[inlet]] = 1;
    while (!stack.empty()) {
        int c = stack.back();
        stack.pop_back();
        for (const auto& [w, gc] : cond[c])
            if (!reach[w]) {
                reach[w] = 1;
                stack.push_back(w);
            }
    }
    if (!reach[idx[outlet]]) return out;
    out.connected = true;

    // unknowns: reachable nodes except the two fixed-pressure terminals
    std::vector<int> unknown;
    std::vector<int> local(n, -1);
    for (int i = 0; i < n; ++i) {
        if (!reach[i] || i == idx[inlet] || i == idx[outlet]) continue;
        local[i] = static_cast<int>(unknown.size());
        unknown.push_back(i);
    }

    int m = static_cast<int>(unknown.size());
    std::vector<double> pressure(n, 0.0);
    pressure[idx[inlet]] = 1.0;

    std::vector<double> a(static_cast<size_t>(m) * m, 0.0), b(m, 0.0);
    for (int u = 0; u < m; ++u) {
        int i = unknown[u];
        double diag = 0.0;
        for (const auto& [w, gc] : cond[i]) {
            diag += gc;
            if (local[w] >= 0)
                a[u * m + local[w]] -= gc;
            else if (w == idx[inlet])
                b[u] += gc * 1.0;
        }
        a[u * m + u] = diag;
    }

    if (m > 0) {
        std::vector<double> afact = a, x = b;
        if (!cholesky_solve(afact, x, m))
            throw InternalError("compute_quant: singular node-balance system");
        for (int u = 0; u < m; ++u) pressure[unknown[u]] = x[u];

        double rmax = 0.0, bmax = 0.0;
        for (int u = 0; u < m; ++u) {
            double s = -b[u];
            for (int w = 0; w < m; ++w) s += a[u * m + w] * x[w];
            rmax = std::max(rmax, std::abs(s));
            bmax = std::max(bmax, std::abs(b[u]));
        }
        out.residual = bmax > 0 ? rmax / bmax : rmax;
    }

    double flow = 0.0;
    for (const auto& [w, gc] : cond[idx[inlet]]) flow += gc * (1.0 - pressure[w]);
    if (flow <= 0.0) throw InternalError("compute_quant: nonpositive inlet flow");
    out.resistance = 1.0 / flow;
    return out;
}

}  // namespace

QuantReport compute_quant(const VascularGraph& graph, const QuantOptions& opts) {
    if (opts.region_volume_mm3 <= 0)
        throw ConfigError("compute_quant: region volume must be positive");
    if (opts.inlet_node.has_value() != opts.outlet_node.has_value())
        throw ConfigError("compute_quant: inlet and outlet must be supplied together");
    if (opts.inlet_node && *opts.inlet_node == *opts.outlet_node)
        throw ConfigError("compute_quant: inlet and outlet must differ");

    QuantReport rep;
    rep.morph = analytic_properties(graph, opts.region_volume_mm3);
    rep.volume_id = opts.volume_id;
    rep.spacing_mm = opts.spacing_mm;

    // CV of junction degrees
    std::map<int, int> deg;
    for (const auto& e : graph.edges) {
        deg[e.a]++;
        deg[e.b]++;
    }
    std::vector<int> junction_degrees;
    for (const auto& [id, d] : deg)
        if (d >= 3) junction_degrees.push_back(d);
    if (!junction_degrees.empty()) {
        double mean = 0.0;
        for (int d : junction_degrees) mean += d;
        mean /= static_cast<double>(junction_degrees.size());
        double var = 0.0;
        for (int d : junction_degrees) var += (d - mean) * (d - mean);
        var /= static_cast<double>(junction_degrees.size());
        rep.branching_heterogeneity = std::sqrt(var) / mean;
        rep.heterogeneity_defined = true;
    }

    rep.circulatory_index =
        graph.edges.empty() ? 0.0
                            : static_cast<double>(rep.morph.cycles) /
                                  static_cast<double>(graph.edges.size());

    if (opts.inlet_node) {
        rep.resistance_requested = true;
        auto flow = solve_network(graph, *opts.inlet_node, *opts.outlet_node,
                                  opts.viscosity_pa_s);
        rep.inlet_outlet_connected = flow.connected;
        rep.network_resistance = flow.resistance;
        rep.solve_residual = flow.residual;
        rep.perfusion_index =
            flow.connected ? (1.0 / flow.resistance) / opts.region_volume_mm3 : 0.0;
    }
    return rep;
}

json quant_report_to_json(const QuantReport& r) {
    json j;
    j["vessel_density_mm_per_mm3"] = r.morph.vessel_density;
    j["mean_diameter_um"] = r.morph.mean_diameter_um;
    j["surface_area_mm2"] = r.morph.surface_area_mm2;
    j["mean_branch_angle_deg"] = r.morph.mean_branch_angle_deg;
    j["branch_angles_deg"] = r.morph.branch_angles_deg;
    j["total_length_mm"] = r.morph.total_length_mm;
    j["components"] = r.morph.components;
    j["cycles"] = r.morph.cycles;
    // no standard definitions exist for these two; ours are spelled out
    j["branching_heterogeneity"] = {{"value", r.branching_heterogeneity},
                                    {"defined", r.heterogeneity_defined},
                                    {"definition", "artifact-defined: CV of junction degrees"}};
    j["circulatory_index"] = {{"value", r.circulatory_index},
                              {"definition", "artifact-defined: cycles / edges"}};
    j["vessel_opening_degree"] = nullptr;  // no usable definition exists
    if (r.resistance_requested) {
        j["network_resistance_pa_s_per_mm3"] =
            r.inlet_outlet_connected ? json(r.network_resistance) : json("inf");
        j["inlet_outlet_connected"] = r.inlet_outlet_connected;
        j["perfusion_index"] = r.perfusion_index;
        j["solve_residual"] = r.solve_residual;
    }
    j["provenance"] = {{"volume_id", r.volume_id},
                       {"spacing_mm", {r.spacing_mm[0], r.spacing_mm[1], r.spacing_mm[2]}}};
    return j;
}

std::string quant_report_csv_header() {
    return "volume_id,vessel_density_mm_per_mm3,mean_diameter_um,surface_area_mm2,"
           "mean_branch_angle_deg,total_length_mm,components,cycles,"
           "branching_heterogeneity,circulatory_index,network_resistance,perfusion_index";
}

std::string quant_report_csv_row(const QuantReport& r) {
    std::ostringstream os;
    os.precision(12);
    os << r.volume_id << "," << r.morph.vessel_density << "," << r.morph.mean_diameter_um << ","
       << r.morph.surface_area_mm2 << "," << r.morph.mean_branch_angle_deg << ","
       << r.morph.total_length_mm << "," << r.morph.components << "," << r.morph.cycles << ","
       << r.branching_heterogeneity << "," << r.circulatory_index << ",";
    if (r.resistance_requested && r.inlet_outlet_connected)
        os << r.network_resistance << "," << r.perfusion_index;
    else if (r.resistance_requested)
        os << "inf,0";
    else
        os << ",";
    return os.str();
}

}  // namespace vf
