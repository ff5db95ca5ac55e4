#include "vascufold/phantom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/rng.hpp"

namespace vf {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Segment {
    Vec3 a, b;
    double r_mm;
    int node_a, node_b;  // graph node ids at the ends
};

// Closest-approach distance between two 3D segments (Ericson, Real-Time
// Collision Detection 5.1.9).
double segment_segment_dist(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
    const double eps = 1e-12;
    Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
    double a = norm2(d1), e = norm2(d2), f = dot(d2, r);
    double s, t;
    if (a <= eps && e <= eps) return norm(r);
    if (a <= eps) {
        s = 0.0;
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        double c = dot(d1, r);
        if (e <= eps) {
            t = 0.0;
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            double b = dot(d1, d2);
            double denom = a * e - b * b;
            s = denom > eps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    Vec3 c1 = p1 + d1 * s, c2 = p2 + d2 * t;
    return norm(c1 - c2);
}

// Uniform direction in the spherical cap of half-angle alpha around axis.
Vec3 sample_cone(Rng& rng, const Vec3& axis, double alpha_rad) {
    double cos_min = std::cos(alpha_rad);
    double c = rng.uniform(cos_min, 1.0);
    double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    double phi = rng.uniform(0.0, 2.0 * kPi);
    Vec3 w = normalized(axis);
    Vec3 ref = std::abs(w.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 u = normalized(cross(w, ref));
    Vec3 v = cross(w, u);
    return u * (s * std::cos(phi)) + v * (s * std::sin(phi)) + w * c;
}

struct Grower {
    const PhantomConfig& cfg;
    Rng rng;
    VascularGraph g;
    std::vector<Segment> segments;
    std::vector<int> root_bases;  // inlet nodes, excluded from loop candidates
    Vec3 slab_lo, slab_hi;        // current tree's allowed box
    bool incomplete = false;      // a tip gave up during growth

    Grower(const PhantomConfig& c, uint64_t stream_seed) : cfg(c), rng(stream_seed) {}

    bool inside_slab(const Vec3& p, double margin) const {
        return p.x >= slab_lo.x + margin && p.x <= slab_hi.x - margin &&
               p.y >= slab_lo.y + margin && p.y <= slab_hi.y - margin &&
               p.z >= slab_lo.z + margin && p.z <= slab_hi.z - margin;
    }

    // Clearance against every segment not incident to node `from_node`.
    bool clear_of_others(const Vec3& a, const Vec3& b, double r_mm, int from_node,
                         double gap_mm) const {
        for (const auto& s : segments) {
            if (s.node_a == from_node || s.node_b == from_node) continue;
            if (segment_segment_dist(a, b, s.a, s.b) < r_mm + s.r_mm + gap_mm) return false;
        }
        return true;
    }

    int add_node(const Vec3& p) {
        int id = static_cast<int>(g.nodes.size());
        g.nodes.push_back({id, p});
        return id;
    }

    void add_edge(int na, int nb, double r_um) {
        int id = static_cast<int>(g.edges.size());
        const Vec3& pa = g.nodes[na].p;
        const Vec3& pb = g.nodes[nb].p;
        g.edges.push_back({id, na, nb, {pa, pb}, {r_um, r_um}});
        segments.push_back({pa, pb, r_um * 1e-3, na, nb});
    }

    // Try to place one child segment from the tip at `node_id`. Retries
    // resample the direction and shrink the length before giving up.
    std::optional<int> place_segment(int node_id, const Vec3& dir_axis, double r_um,
                                     double cone_rad, const Vec3* avoid_dir) {
        const Vec3& origin = g.nodes[node_id].p;
        double r_mm = r_um * 1e-3;
        double margin = r_mm + 2e-3;
        for (int attempt = 0; attempt < 48; ++attempt) {
            Vec3 dir = sample_cone(rng, dir_axis, cone_rad);
            // shallow sibling wedges corner-bridge when rasterized; keep them apart
            if (avoid_dir && dot(dir, *avoid_dir) > std::cos(30.0 * kPi / 180.0)) continue;
            double len = rng.uniform(cfg.seg_len_min_mm, cfg.seg_len_max_mm);
            len *= std::pow(0.94, attempt);
            // stubs below ~5 radii collapse into the junction blob when
            // rasterized and thinned, so never place them
            len = std::max(len, std::max(5.0 * r_mm, 0.1));
            Vec3 tip = origin + dir * len;
            if (!inside_slab(tip, margin)) continue;
            if (!clear_of_others(origin, tip, r_mm, node_id, 2.0 * r_mm)) continue;
            int nid = add_node(tip);
            add_edge(node_id, nid, r_um);
            return nid;
        }
        incomplete = true;
        return std::nullopt;
    }

    void grow_tip(int node_id, const Vec3& tangent, double r_um, int level) {
        if (level >= cfg.depth) return;
        if (cfg.branch_prob < 1.0 && rng.uniform() >= cfg.branch_prob) return;
        // Murray split: flow fraction alpha to one child
        double alpha = rng.uniform(0.45, 0.55);
        double k = cfg.murray_k;
        double r1 = r_um * std::pow(alpha, 1.0 / k);
        double r2 = r_um * std::pow(1.0 - alpha, 1.0 / k);
        double cone = cfg.cone_half_angle_deg * kPi / 180.0;
        auto c1 = place_segment(node_id, tangent, r1, cone, nullptr);
        Vec3 dir1 = c1 ? normalized(g.nodes[*c1].p - g.nodes[node_id].p) : Vec3{};
        auto c2 = place_segment(node_id, tangent, r2, cone, c1 ? &dir1 : nullptr);
        if (c1) grow_tip(*c1, dir1, r1, level + 1);
        if (c2) grow_tip(*c2, normalized(g.nodes[*c2].p - g.nodes[node_id].p), r2, level + 1);
    }

    void grow_tree(int tree_index) {
        double span_x = cfg.region_mm.x / cfg.trees;
        slab_lo = {tree_index * span_x, 0.0, 0.0};
        slab_hi = {(tree_index + 1) * span_x, cfg.region_mm.y, cfg.region_mm.z};

        double r_mm = cfg.root_radius_um * 1e-3;
        double margin = r_mm + 2e-3;
        double avail_z = cfg.region_mm.z - 2.0 * margin;
        double root_len = std::min(cfg.seg_len_max_mm, 0.9 * avail_z);
        if (avail_z <= 0.0 || root_len < std::min(cfg.seg_len_min_mm, 4.0 * r_mm) ||
            slab_hi.x - slab_lo.x <= 2.0 * margin || cfg.region_mm.y <= 2.0 * margin)
            throw ConfigError("phantom: region too small to place root segment");
        root_len = std::max(root_len, std::min(cfg.seg_len_min_mm, avail_z * 0.9));

        Vec3 root_base = {slab_lo.x + 0.5 * (slab_hi.x - slab_lo.x),
                          0.5 * cfg.region_mm.y, margin};
        Vec3 dir = normalized(Vec3{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 1.0});
        Vec3 tip = root_base + dir * root_len;
        if (!inside_slab(tip, margin)) {
            dir = {0, 0, 1};
            tip = root_base + dir * root_len;
            if (!inside_slab(tip, margin))
                throw ConfigError("phantom: region too small to place root segment");
        }
        int base_id = add_node(root_base);
        int tip_id = add_node(tip);
        root_bases.push_back(base_id);
        add_edge(base_id, tip_id, cfg.root_radius_um);
        grow_tip(tip_id, dir, cfg.root_radius_um, 0);
    }

    // Extra edges between close leaf pairs of the same component; each one
    // adds exactly one cycle.
    bool insert_loops() {
        for (int inserted = 0; inserted < cfg.loops; ++inserted) {
            // degree and adjacency snapshots
            std::vector<int> degree(g.nodes.size(), 0);
            std::vector<int> peer(g.nodes.size(), -1);  // other end of a leaf's edge
            for (const auto& e : g.edges) {
                degree[e.a]++;
                degree[e.b]++;
                peer[e.a] = e.b;
                peer[e.b] = e.a;
            }
            std::vector<int> comp = component_labels();

            struct Cand {
                double d;
                int a, b;
            };
            auto is_root_base = [&](size_t n) {
                return std::find(root_bases.begin(), root_bases.end(), static_cast<int>(n)) !=
                       root_bases.end();
            };
            std::vector<Cand> cands;
            for (size_t i = 0; i < g.nodes.size(); ++i) {
                if (degree[i] != 1 || is_root_base(i)) continue;
                for (size_t j = i + 1; j < g.nodes.size(); ++j) {
                    if (degree[j] != 1 || is_root_base(j)) continue;
                    if (comp[i] != comp[j]) continue;
                    if (peer[i] == peer[j]) continue;  // siblings share a parent
                    cands.push_back({norm(g.nodes[i].p - g.nodes[j].p),
                                     static_cast<int>(i), static_cast<int>(j)});
                }
            }
            std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
                return x.d != y.d ? x.d < y.d : (x.a != y.a ? x.a < y.a : x.b < y.b);
            });

            bool placed = false;
            for (const auto& c : cands) {
                double r_um = std::min(leaf_radius_um(c.a), leaf_radius_um(c.b));
                double r_mm = r_um * 1e-3;
                const Vec3& pa = g.nodes[c.a].p;
                const Vec3& pb = g.nodes[c.b].p;
                if (norm(pb - pa) < 4.0 * r_mm) continue;
                Vec3 loop_dir = normalized(pb - pa);
                double gap = std::max(2.0 * r_mm, 0.04);
                bool ok = true;
                for (const auto& s : segments) {
                    bool touches_a = s.node_a == c.a || s.node_b == c.a;
                    bool touches_b = s.node_a == c.b || s.node_b == c.b;
                    if (touches_a || touches_b) {
                        // adjacent at a node: capsule overlap stays near the
                        // junction as long as the edges diverge
                        Vec3 other = normalized(s.b - s.a);
                        if (std::abs(dot(loop_dir, other)) > std::cos(30.0 * kPi / 180.0)) {
                            ok = false;
                            break;
                        }
                        continue;
                    }
                    if (segment_segment_dist(pa, pb, s.a, s.b) < r_mm + s.r_mm + gap) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                add_edge(c.a, c.b, r_um);
                placed = true;
                break;
            }
            if (!placed) return false;
        }
        return true;
    }

    double leaf_radius_um(int node_id) const {
        for (const auto& e : g.edges)
            if (e.a == node_id || e.b == node_id) return e.radius_um.front();
        throw InternalError("phantom: leaf node without edge");
    }

    std::vector<int> component_labels() const {
        std::vector<int> label(g.nodes.size());
        for (size_t i = 0; i < label.size(); ++i) label[i] = static_cast<int>(i);
        // plain union-find, ids are dense
        std::vector<int> parent = label;
        std::function<int(int)> find = [&](int a) {
            while (parent[a] != a) {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            return a;
        };
        for (const auto& e : g.edges) parent[find(e.a)] = find(e.b);
        for (size_t i = 0; i < label.size(); ++i) label[i] = find(static_cast<int>(i));
        return label;
    }
};

}  // namespace

void PhantomConfig::validate() const {
    if (region_mm.x <= 0 || region_mm.y <= 0 || region_mm.z <= 0)
        throw ConfigError("phantom.region_mm must be positive");
    if (root_radius_um <= 0) throw ConfigError("phantom.root_radius_um must be positive");
    if (loops < 0) throw ConfigError("phantom.loops must be >= 0");
    if (trees < 1) throw ConfigError("phantom.trees must be >= 1");
    if (depth < 0) throw ConfigError("phantom.depth must be >= 0");
    if (branch_prob < 0 || branch_prob > 1) throw ConfigError("phantom.branch_prob must be in [0,1]");
    if (murray_k <= 0) throw ConfigError("phantom.murray_k must be positive");
    if (seg_len_min_mm <= 0 || seg_len_max_mm < seg_len_min_mm)
        throw ConfigError("phantom.segment length bounds invalid");
    if (cone_half_angle_deg <= 0 || cone_half_angle_deg >= 90)
        throw ConfigError("phantom.cone_half_angle_deg must be in (0,90)");
}

VascularGraph generate_network(const PhantomConfig& config) {
    config.validate();
    // Clearance-respecting growth can box itself in; retry whole attempts on
    // derived streams until the geometry works out. Deterministic per seed.
    const int kMaxAttempts = 48;
    std::optional<VascularGraph> fallback;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Grower grower(config, derive_seed(config.seed, "phantom.generate", attempt));
        grower.g.region_mm = config.region_mm;
        grower.g.seed = config.seed;
        for (int t = 0; t < config.trees; ++t) grower.grow_tree(t);
        bool full = !(config.branch_prob >= 1.0 && grower.incomplete);
        if (!grower.insert_loops()) continue;
        grower.g.validate();
        if (full) return grower.g;
        if (!fallback) fallback = grower.g;
    }
    if (fallback) return *fallback;  // loops placed, some tips gave up
    throw ConfigError("phantom: cannot insert requested loops without contact");
}

GroundTruthParams analytic_properties(const VascularGraph& graph, double region_volume_mm3) {
    if (region_volume_mm3 <= 0) throw ConfigError("analytic_properties: region volume must be positive");
    GroundTruthParams out;
    double len_sum = 0.0, diam_weighted = 0.0, surface = 0.0;
    for (const auto& e : graph.edges) {
        for (size_t i = 1; i < e.poly.size(); ++i) {
            double l = norm(e.poly[i] - e.poly[i - 1]);
            double r_um = 0.5 * (e.radius_um[i] + e.radius_um[i - 1]);
            len_sum += l;
            diam_weighted += l * 2.0 * r_um;
            surface += 2.0 * kPi * (r_um * 1e-3) * l;
        }
    }
    out.total_length_mm = len_sum;
    out.vessel_density = len_sum / region_volume_mm3;
    out.mean_diameter_um = len_sum > 0 ? diam_weighted / len_sum : 0.0;
    out.surface_area_mm2 = surface;

    // branch angles between non-parent edge pairs at junctions
    std::map<int, std::vector<std::pair<Vec3, double>>> tangents;  // node -> (away tangent, radius)
    for (const auto& e : graph.edges) {
        Vec3 ta = normalized(e.poly[1] - e.poly[0]);
        Vec3 tb = normalized(e.poly[e.poly.size() - 2] - e.poly.back());
        double rmean = 0.0;
        for (double r : e.radius_um) rmean += r;
        rmean /= static_cast<double>(e.radius_um.size());
        tangents[e.a].push_back({ta, rmean});
        tangents[e.b].push_back({tb, rmean});
    }
    for (const auto& [node, list] : tangents) {
        if (list.size() < 3) continue;
        size_t parent = 0;
        for (size_t i = 1; i < list.size(); ++i)
            if (list[i].second > list[parent].second) parent = i;
        for (size_t i = 0; i < list.size(); ++i) {
            if (i == parent) continue;
            for (size_t j = i + 1; j < list.size(); ++j) {
                if (j == parent) continue;
                double c = std::clamp(dot(list[i].first, list[j].first), -1.0, 1.0);
                out.branch_angles_deg.push_back(std::acos(c) * 180.0 / kPi);
            }
        }
    }
    if (!out.branch_angles_deg.empty()) {
        double s = 0.0;
        for (double a : out.branch_angles_deg) s += a;
        out.mean_branch_angle_deg = s / static_cast<double>(out.branch_angles_deg.size());
    }

    out.components = graph.components();
    out.cycles = graph.cycles();
    return out;
}

}  // namespace vf
