#pragma once

// Effective threshold link lengths. Surface links share one
// scenario-level bound derived from the safe transmit power; implant
// bounds are per node, from each implant's own power budget and depth.
// Scenario overrides replace the power-derived values wholesale, which
// is how fixed-threshold studies are run.

#include <limits>
#include <vector>

#include "gcibn/channel.hpp"
#include "gcibn/core.hpp"

namespace gcibn {

inline double config_ss_threshold(const ScenarioConfig& config) {
    if (config.threshold_ss) return *config.threshold_ss;
    const double g_required = config.snr_noise_power() / config.safe_power;
    return inverse_gain(config.channel, Path::SkinToSkin, g_required, 0.0);
}

inline double node_ms_threshold(const ScenarioConfig& config, const NodeSpec& node) {
    if (config.threshold_ms) return *config.threshold_ms;
    return threshold_length(config, node);
}

struct Thresholds {
    double ss = 0.0;                 // shared surface-path bound, cm
    std::vector<double> per_node;    // per-node bound (budget- and path-aware)
    double global_ms = std::numeric_limits<double>::infinity();  // min over implants

    // Grid edge for the initial cuboid partition.
    double grid_threshold() const { return std::min(ss, global_ms); }
};

inline Thresholds compute_thresholds(const ScenarioConfig& config,
                                     const std::vector<NodeSpec>& nodes) {
    Thresholds th;
    th.ss = config_ss_threshold(config);
    th.per_node.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const NodeSpec& node = nodes[i];
        if (node.implant()) {
            th.per_node[i] = node_ms_threshold(config, node);
            th.global_ms = std::min(th.global_ms, th.per_node[i]);
        } else {
            th.per_node[i] = config.threshold_ss
                                 ? th.ss
                                 : std::min(th.ss, threshold_length(config, node));
        }
    }
    return th;
}

}  // namespace gcibn
