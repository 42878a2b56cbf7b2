#pragma once

// Core domain types for a galvanic-coupled intra-body network (GC-IBN):
// the layered tissue volume, sensor/actuator nodes, on-skin relays and
// the clustered topology state shared by the partitioning and
// optimization stages.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcibn {

// Tissue layers a node may reside in. The numeric values feed the
// energy-priority exponent, so Skin=1 and Muscle=2 are load-bearing.
enum class Tissue : int { Skin = 1, Muscle = 2 };

inline int tissue_value(Tissue t) { return static_cast<int>(t); }

// Layered tissue volume. All geometry is in cm; the surface rectangle
// [x1,x2]x[y1,y2] is where relays may be placed.
struct TissueStack {
    double x1 = 0.0, x2 = 100.0;  // surface extent, cm
    double y1 = 0.0, y2 = 100.0;
    double skin = 0.2;    // layer thicknesses, cm
    double fat = 0.8;
    double muscle = 4.0;

    double depth() const { return skin + fat + muscle; }

    void validate() const {
        if (!(x2 > x1) || !(y2 > y1))
            throw std::invalid_argument("tissue stack: degenerate surface extent");
        if (skin < 0 || fat < 0 || muscle < 0)
            throw std::invalid_argument("tissue stack: negative layer thickness");
        if (!(depth() > 0))
            throw std::invalid_argument("tissue stack: zero total depth");
    }
};

// A sensor or actuator. Surface nodes sit on the skin (z=0); implants
// sit in muscle at depth z (cm, measured within the muscle layer).
struct NodeSpec {
    std::string id;
    double x = 0.0, y = 0.0;   // surface-plane coordinates, cm
    double z = 0.0;            // depth in tissue, cm (0 for surface nodes)
    Tissue tissue = Tissue::Skin;
    double rate = 1.0;         // required data rate, bandwidth units
    double energy = 2592.0;    // energy store E0, J (240 mAh @ 3 V)
    double lifetime_s = 3e5;   // required operating period, s
    int modulation = 2;        // M-PSK modulation level, >= 2

    bool implant() const { return tissue == Tissue::Muscle; }

    void validate(const TissueStack& stack) const {
        if (x < stack.x1 || x > stack.x2 || y < stack.y1 || y > stack.y2)
            throw std::invalid_argument("node " + id + ": node out of volume");
        if (tissue == Tissue::Skin && z != 0.0)
            throw std::invalid_argument("node " + id + ": surface node with nonzero depth");
        if (tissue == Tissue::Muscle && (z < 0.0 || z > stack.muscle))
            throw std::invalid_argument("node " + id + ": node out of volume");
        if (!(rate > 0)) throw std::invalid_argument("node " + id + ": nonpositive data rate");
        if (!(energy > 0)) throw std::invalid_argument("node " + id + ": nonpositive energy store");
        if (!(lifetime_s > 0)) throw std::invalid_argument("node " + id + ": nonpositive lifetime");
        if (modulation < 2) throw std::invalid_argument("node " + id + ": modulation level < 2");
    }
};

// An on-skin relay position; z is 0 by construction.
struct RelayPlacement {
    double x = 0.0, y = 0.0;
};

// One cluster: member node indices plus the relay serving them.
struct Cluster {
    std::vector<std::size_t> members;   // indices into the node list, sorted
    RelayPlacement relay;
    std::uint64_t uid = 0;              // bumped on membership change

    std::size_t size() const { return members.size(); }
};

// Cluster memberships, relay placements and the not-clustered list.
// Every node index appears in exactly one cluster or in `unclustered`.
struct ClusterState {
    std::vector<Cluster> clusters;
    std::vector<std::size_t> unclustered;   // sorted node indices (NL)

    std::size_t cluster_count() const { return clusters.size(); }

    std::size_t assigned_count() const {
        std::size_t n = 0;
        for (const auto& c : clusters) n += c.size();
        return n;
    }

    // Conservation check: each of the n nodes appears exactly once.
    bool consistent(std::size_t node_count) const {
        std::vector<int> seen(node_count, 0);
        for (const auto& c : clusters) {
            if (c.members.empty()) return false;
            for (auto m : c.members) {
                if (m >= node_count || seen[m]++) return false;
            }
        }
        for (auto m : unclustered)
            if (m >= node_count || seen[m]++) return false;
        for (int s : seen)
            if (s != 1) return false;
        return true;
    }
};

// Link length between a node and a relay (cm). Surface links are plain
// Euclidean on the skin; implant links are measured to the relay's
// vertical projection onto the implant plane, which reduces to the same
// expression with Z equal to the implant depth.
inline double link_length(const NodeSpec& node, const RelayPlacement& relay) {
    const double dx = node.x - relay.x;
    const double dy = node.y - relay.y;
    return std::sqrt(dx * dx + dy * dy + node.z * node.z);
}

// Effective link weight from tissue, depth and normalized data rate.
// `alpha` >= 1 prioritizes implant energy; `depth_scale` converts the
// depth term in the exponent (defaults to per-cm).
inline double node_weight(const NodeSpec& node, const std::vector<double>& cluster_rates,
                          double alpha, double depth_scale = 1.0) {
    if (cluster_rates.empty()) throw std::invalid_argument("empty cluster");
    const double sum = std::accumulate(cluster_rates.begin(), cluster_rates.end(), 0.0);
    const double exponent = (tissue_value(node.tissue) + node.z * depth_scale) - 1.0;
    return std::pow(alpha, exponent) * node.rate / sum;
}

// Cluster capacity bound: at least one member and total rate within the
// outgoing-link capacity.
inline bool capacity_ok(const std::vector<double>& cluster_rates, double capacity) {
    if (cluster_rates.empty()) return false;
    const double sum = std::accumulate(cluster_rates.begin(), cluster_rates.end(), 0.0);
    return sum <= capacity;
}

// Power-uniformity gate on implant links: min/max must exceed the
// uniformity factor. Vacuously true for fewer than two links; an
// all-zero set (every implant directly under the relay) counts as
// perfectly uniform.
inline bool uniformity_ok(const std::vector<double>& implant_lengths, double uniformity) {
    if (implant_lengths.size() <= 1) return true;
    const auto [mn, mx] = std::minmax_element(implant_lengths.begin(), implant_lengths.end());
    if (*mx <= 0.0) return true;
    return (*mn / *mx) > uniformity;
}

}  // namespace gcibn
