#include "vascufold/phantom/vascular_graph.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/io.hpp"

namespace vf {
namespace {

// Union-find over node ids.
struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

const GraphNode& VascularGraph::node(int id) const {
    for (const auto& n : nodes)
        if (n.id == id) return n;
    throw InternalError("VascularGraph: unknown node id " + std::to_string(id));
}

double VascularGraph::edge_length_mm(const GraphEdge& e) const {
    double len = 0.0;
    for (size_t i = 1; i < e.poly.size(); ++i) len += norm(e.poly[i] - e.poly[i - 1]);
    return len;
}

double VascularGraph::total_length_mm() const {
    double len = 0.0;
    for (const auto& e : edges) len += edge_length_mm(e);
    return len;
}

int VascularGraph::components() const {
    if (nodes.empty()) return 0;
    std::unordered_map<int, int> idx;
    for (size_t i = 0; i < nodes.size(); ++i) idx[nodes[i].id] = static_cast<int>(i);
    DisjointSet ds(nodes.size());
    for (const auto& e : edges) ds.unite(idx.at(e.a), idx.at(e.b));
    int c = 0;
    for (size_t i = 0; i < nodes.size(); ++i) c += (ds.find(static_cast<int>(i)) == static_cast<int>(i));
    return c;
}

int VascularGraph::cycles() const {
    return static_cast<int>(edges.size()) - static_cast<int>(nodes.size()) + components();
}

void VascularGraph::validate() const {
    std::unordered_map<int, const GraphNode*> by_id;
    for (const auto& n : nodes) {
        if (!by_id.emplace(n.id, &n).second)
            throw InternalError("graph: duplicate node id " + std::to_string(n.id));
    }
    auto inside = [&](const Vec3& p) {
        const double tol = 1e-9;
        return p.x >= -tol && p.y >= -tol && p.z >= -tol &&
               p.x <= region_mm.x + tol && p.y <= region_mm.y + tol && p.z <= region_mm.z + tol;
    };
    for (const auto& e : edges) {
        auto ita = by_id.find(e.a);
        auto itb = by_id.find(e.b);
        if (ita == by_id.end() || itb == by_id.end())
            throw InternalError("graph: edge " + std::to_string(e.id) + " references missing node");
        if (e.poly.size() < 2 || e.poly.size() != e.radius_um.size())
            throw InternalError("graph: edge " + std::to_string(e.id) + " malformed polyline");
        if (norm(e.poly.front() - ita->second->p) > 1e-9 || norm(e.poly.back() - itb->second->p) > 1e-9)
            throw InternalError("graph: edge " + std::to_string(e.id) + " endpoints disagree with nodes");
        for (const auto& p : e.poly)
            if (!inside(p))
                throw InternalError("graph: edge " + std::to_string(e.id) + " leaves bounding region");
        for (double r : e.radius_um)
            if (!(r > 0.0))
                throw InternalError("graph: edge " + std::to_string(e.id) + " has nonpositive radius");
        if (!(edge_length_mm(e) > 0.0))
            throw InternalError("graph: edge " + std::to_string(e.id) + " has zero length");
    }
}

std::string graph_to_json(const VascularGraph& g) {
    json j;
    j["nodes"] = json::array();
    for (const auto& n : g.nodes)
        j["nodes"].push_back({{"id", n.id}, {"p", {n.p.x, n.p.y, n.p.z}}});
    j["edges"] = json::array();
    for (const auto& e : g.edges) {
        json je;
        je["id"] = e.id;
        je["a"] = e.a;
        je["b"] = e.b;
        je["poly"] = json::array();
        for (const auto& p : e.poly) je["poly"].push_back({p.x, p.y, p.z});
        je["r"] = e.radius_um;
        j["edges"].push_back(std::move(je));
    }
    j["meta"] = {{"region_mm", {g.region_mm.x, g.region_mm.y, g.region_mm.z}},
                 {"seed", g.seed}};
    return j.dump(2) + "\n";
}

VascularGraph graph_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("graph JSON parse error: ") + e.what());
    }
    VascularGraph g;
    for (const auto& jn : j.at("nodes")) {
        GraphNode n;
        n.id = jn.at("id").get<int>();
        auto p = jn.at("p").get<std::vector<double>>();
        n.p = {p.at(0), p.at(1), p.at(2)};
        g.nodes.push_back(n);
    }
    for (const auto& je : j.at("edges")) {
        GraphEdge e;
        e.id = je.at("id").get<int>();
        e.a = je.at("a").get<int>();
        e.b = je.at("b").get<int>();
        for (const auto& jp : je.at("poly")) {
            auto p = jp.get<std::vector<double>>();
            e.poly.push_back({p.at(0), p.at(1), p.at(2)});
        }
        e.radius_um = je.at("r").get<std::vector<double>>();
        g.edges.push_back(std::move(e));
    }
    const auto& meta = j.at("meta");
    auto r = meta.at("region_mm").get<std::vector<double>>();
    g.region_mm = {r.at(0), r.at(1), r.at(2)};
    g.seed = meta.at("seed").get<uint64_t>();
    return g;
}

void save_graph(const VascularGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << graph_to_json(g);
}

VascularGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return graph_from_json(text);
}

}  // namespace vf
