#pragma once

// Phase I: definitive cuboid-grid partitioning. The surface is split
// into square cells whose edge guarantees that any node and any relay
// point inside the same cell are within the governing threshold link
// length (horizontally); each occupied cell seeds one initial cluster.

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gcibn/core.hpp"

namespace gcibn {

struct GridSpec {
    double cell = 0.0;      // cell edge length, cm
    double x0 = 0.0, y0 = 0.0;
    int nx = 0, ny = 0;     // cells per axis (= split indices - 1)
    std::size_t geometric_cells = 0;   // nx * ny, occupied or not
    std::size_t occupied = 0;          // cells holding at least one node
};

// Cell edge from the governing thresholds: the cell diagonal equals the
// smaller threshold, so no in-cell horizontal separation can exceed it.
inline double grid_size(double threshold_ss, double threshold_ms) {
    if (!(threshold_ss > 0) || !(threshold_ms > 0))
        throw std::invalid_argument("grid size: nonpositive threshold");
    return std::min(threshold_ss, threshold_ms) / std::sqrt(2.0);
}

struct PartitionResult {
    GridSpec grid;
    ClusterState state;
};

// Assigns every node to its enclosing cell. Cells are half-open on the
// low edge except the last per axis, which is closed, so boundary nodes
// land in exactly one cell. Empty cells produce no cluster; the initial
// relay sits at the cell center (clamped into the surface rectangle).
inline PartitionResult partition(const std::vector<NodeSpec>& nodes, const TissueStack& stack,
                                 double cell) {
    if (!(cell > 0)) throw std::invalid_argument("partition: nonpositive cell size");
    stack.validate();

    PartitionResult out;
    GridSpec& grid = out.grid;
    grid.cell = cell;
    grid.x0 = stack.x1;
    grid.y0 = stack.y1;
    grid.nx = static_cast<int>(std::ceil((stack.x2 - stack.x1) / cell));
    grid.ny = static_cast<int>(std::ceil((stack.y2 - stack.y1) / cell));
    grid.geometric_cells = static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);

    std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const NodeSpec& node = nodes[i];
        if (node.x < stack.x1 || node.x > stack.x2 || node.y < stack.y1 || node.y > stack.y2)
            throw std::invalid_argument("node " + node.id + ": node out of volume");
        int ix = std::min(static_cast<int>((node.x - stack.x1) / cell), grid.nx - 1);
        int iy = std::min(static_cast<int>((node.y - stack.y1) / cell), grid.ny - 1);
        cells[{iy, ix}].push_back(i);
    }

    ClusterState& state = out.state;
    for (auto& [key, members] : cells) {
        Cluster c;
        c.members = std::move(members);
        const double cx = stack.x1 + (key.second + 0.5) * cell;
        const double cy = stack.y1 + (key.first + 0.5) * cell;
        c.relay = {std::min(cx, stack.x2), std::min(cy, stack.y2)};
        state.clusters.push_back(std::move(c));
    }
    grid.occupied = state.clusters.size();
    return out;
}

}  // namespace gcibn
