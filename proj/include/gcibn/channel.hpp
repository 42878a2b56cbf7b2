#pragma once

// Parametric tissue channel: log-distance gain per propagation path with
// a depth bonus on implant paths, analytic inverses, transmit-power
// bounds, threshold link lengths, link-budget energy and battery life.
//
// The gain map is a stand-in for a full circuit tissue model: the
// framework only needs a monotone, invertible length->gain function, so
// each path is fitted to two-point power measurements (see
// `default_channel`).

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

#include "gcibn/core.hpp"

namespace gcibn {

enum class Path { SkinToSkin, MuscleToSkin };

inline Path node_path(const NodeSpec& node) {
    return node.implant() ? Path::MuscleToSkin : Path::SkinToSkin;
}

// One propagation path: gain(len) = g0 * (ref_length/len)^n.
struct PathParams {
    double g0 = 1e-4;         // linear gain at the reference length
    double n = 2.0;           // path-loss exponent
    double ref_length = 1.0;  // cm
};

struct ChannelModel {
    PathParams ss;                   // surface node <-> relay
    PathParams ms;                   // implant <-> relay
    double ms_depth_gain = 1.15;     // extra linear gain per cm of implant depth
};

// Fits one path to two (length, power) measurements. Transmit power at
// fixed SNR scales as 1/gain, so the exponent is the log power ratio
// over the log length ratio.
inline PathParams fit_path(double len_a, double pt_a, double len_b, double pt_b,
                           double min_power_w) {
    if (!(len_a > 0) || !(len_b > 0) || len_a == len_b)
        throw std::invalid_argument("underdetermined");
    PathParams p;
    p.n = std::log(pt_a / pt_b) / std::log(len_a / len_b);
    p.ref_length = 1.0;
    // Anchor absolute scale: gain(len_a) = min_power_w / pt_a.
    p.g0 = (min_power_w / pt_a) * std::pow(len_a / p.ref_length, p.n);
    return p;
}

// Two-point porcine measurement anchors used for the default fit:
// moving the relay from 14 cm to 5 cm drops the surface-path transmit
// power 6.5 mW -> 0.8 mW and the implant-path power 4.6 mW -> 0.2 mW.
inline constexpr double kAnchorFarCm = 14.0;
inline constexpr double kAnchorNearCm = 5.0;
inline constexpr double kAnchorSsFarW = 6.5e-3;
inline constexpr double kAnchorSsNearW = 0.8e-3;
inline constexpr double kAnchorMsFarW = 4.6e-3;
inline constexpr double kAnchorMsNearW = 0.2e-3;

// Battery-life model constants. Life follows capacity over duty-cycled
// load current, times one calibration scalar for everything the load
// model does not capture.
struct LifetimeParams {
    double battery_mah = 240.0;
    double duty_cycle = 0.1;
    double overhead_w = 1e-4;     // power drawn by non-radio functions
    double voltage = 3.0;         // supply, V
    double external_factor = 1.778;
};

// All scenario tunables shared across the pipeline.
struct ScenarioConfig {
    double alpha = 4.0;            // energy prioritizing factor, [1,10]
    double uniformity = 0.5;       // implant link min/max lower bound, (0,1]
    double capacity = 10.0;        // outgoing-link capacity Q_o, bandwidth units
    double snr_target = 5.0;       // desired SNR
    bool snr_is_db = false;
    double noise_psd = 1e-13;      // W/Hz
    double bandwidth = 1e4;        // Hz
    double safe_power = 7.5e-3;    // tissue-safe transmit power cap, W
    double power_ratio = 0.5;      // implant mean Pt must be <= this x surface mean Pt
    double depth_scale = 1.0;      // depth contribution per cm in the weight exponent

    ChannelModel channel;
    LifetimeParams lifetime;

    // Optional threshold overrides (cm). When set they replace the
    // power-derived threshold lengths in grid sizing and length bounds.
    std::optional<double> threshold_ss;
    std::optional<double> threshold_ms;

    // Relay solver knobs.
    double l1_penalty = 0.1;       // L1 balance weight, active with >1 implant
    double barrier_mu = 0.1;       // initial barrier weight
    double smooth_eps = 1e-6;      // cm, kink smoothing

    int max_iterations = 100;      // optimization loop cap

    double snr_linear() const {
        return snr_is_db ? std::pow(10.0, snr_target / 10.0) : snr_target;
    }
    // Receiver noise floor scaled by target SNR: the numerator of the
    // minimum-power expression.
    double snr_noise_power() const { return snr_linear() * noise_psd * bandwidth; }

    void validate() const {
        if (alpha < 1.0 || alpha > 10.0)
            throw std::invalid_argument("config: alpha outside [1,10]");
        if (!(uniformity > 0.0) || uniformity > 1.0)
            throw std::invalid_argument("config: uniformity outside (0,1]");
        if (!(capacity > 0)) throw std::invalid_argument("config: nonpositive capacity");
        if (!(snr_linear() > 0)) throw std::invalid_argument("config: nonpositive SNR target");
        if (!(safe_power > 0)) throw std::invalid_argument("config: nonpositive safe power");
        if (!(bandwidth > 0)) throw std::invalid_argument("config: nonpositive bandwidth");
    }
};

// ---- gain map --------------------------------------------------------

inline double gain(const ChannelModel& model, Path path, double length, double depth = 0.0) {
    if (!(length > 0)) throw std::invalid_argument("degenerate link");
    const PathParams& p = (path == Path::SkinToSkin) ? model.ss : model.ms;
    double g = p.g0 * std::pow(p.ref_length / length, p.n);
    if (path == Path::MuscleToSkin) g *= std::pow(model.ms_depth_gain, depth);
    return g;
}

inline double inverse_gain(const ChannelModel& model, Path path, double g, double depth = 0.0) {
    if (!(g > 0) || !std::isfinite(g)) throw std::invalid_argument("unreachable gain");
    const PathParams& p = (path == Path::SkinToSkin) ? model.ss : model.ms;
    double scale = p.g0;
    if (path == Path::MuscleToSkin) scale *= std::pow(model.ms_depth_gain, depth);
    return p.ref_length * std::pow(scale / g, 1.0 / p.n);
}

// ---- transmit power bounds -------------------------------------------

// Minimum transmit power meeting the SNR target through a channel of the
// given gain.
inline double pt_min(const ScenarioConfig& config, double g) {
    if (!(g > 0)) throw std::invalid_argument("degenerate link");
    return config.snr_noise_power() / g;
}

// Minimum power for a node over a link of the given length. Zero-length
// links (a surface node that is itself the relay point) cost nothing.
inline double pt_for_link(const ScenarioConfig& config, const NodeSpec& node, double length) {
    if (length == 0.0) return 0.0;
    return pt_min(config, gain(config.channel, node_path(node), length, node.z));
}

// Upper power bound: tissue safety and the energy budget over the
// required operating period.
inline double pt_max(const ScenarioConfig& config, const NodeSpec& node) {
    return std::min(config.safe_power, node.energy / node.lifetime_s);
}

struct PowerBounds {
    double min_w = 0.0;
    double max_w = 0.0;
    bool feasible() const { return min_w <= max_w; }
};

inline PowerBounds power_bounds(const ScenarioConfig& config, const NodeSpec& node,
                                double length) {
    return {pt_for_link(config, node, length), pt_max(config, node)};
}

// ---- threshold link length -------------------------------------------

// Longest link the node can sustain within its power budget: the
// crossing of the rising minimum-power curve with the node's cap.
// Closed-form for the power-law gain.
inline double threshold_length(const ScenarioConfig& config, const NodeSpec& node) {
    const double cap = pt_max(config, node);
    if (!(cap > 0)) throw std::domain_error("node " + node.id + ": node unreachable at any distance");
    const double g_required = config.snr_noise_power() / cap;
    return inverse_gain(config.channel, node_path(node), g_required, node.z);
}

// Generic crossing finder for pluggable monotone power curves; used to
// cross-check the closed form. `pt_of_length` must be increasing.
inline double threshold_length_bisect(const std::function<double(double)>& pt_of_length,
                                      double cap, double lo, double hi,
                                      double tol = 1e-9) {
    if (pt_of_length(lo) > cap)
        throw std::domain_error("node unreachable at any distance");
    if (pt_of_length(hi) <= cap) return hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (pt_of_length(mid) <= cap ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---- energy and lifetime ---------------------------------------------

// Energy consumed over the required period from the link budget, with
// per-bit energy taken as Pt over bandwidth.
inline double energy_over_period(const NodeSpec& node, double pt, const ScenarioConfig& config) {
    if (!(config.bandwidth > 0)) throw std::invalid_argument("config: nonpositive bandwidth");
    const double bit_energy = pt / config.bandwidth;
    return bit_energy * node.rate * node.lifetime_s /
           (config.bandwidth * std::log2(static_cast<double>(node.modulation)));
}

// Battery life in days at the given transmit power.
inline double node_lifetime_days(double pt, const LifetimeParams& lp) {
    if (pt < 0) throw std::invalid_argument("negative transmit power");
    const double load_ma = (pt + lp.overhead_w) / lp.voltage * 1e3;
    const double hours = lp.battery_mah / (lp.duty_cycle * load_ma);
    return hours / 24.0 * lp.external_factor;
}

inline double node_lifetime_days(double pt, const ScenarioConfig& config) {
    return node_lifetime_days(pt, config.lifetime);
}

// One-time calibration of the external factor against a known
// (power, days) anchor point.
inline double fit_external_factor(const LifetimeParams& lp, double anchor_pt_w,
                                  double anchor_days) {
    LifetimeParams raw = lp;
    raw.external_factor = 1.0;
    return anchor_days / node_lifetime_days(anchor_pt_w, raw);
}

// ---- defaults ----------------------------------------------------------

// Default channel fitted to the measurement anchors at an SNR-noise
// power of 5e-9 W (SNR 5, 1e-13 W/Hz over 10 kHz).
inline ChannelModel default_channel(double snr_noise_power = 5e-9) {
    ChannelModel m;
    m.ss = fit_path(kAnchorFarCm, kAnchorSsFarW, kAnchorNearCm, kAnchorSsNearW, snr_noise_power);
    m.ms = fit_path(kAnchorFarCm, kAnchorMsFarW, kAnchorNearCm, kAnchorMsNearW, snr_noise_power);
    m.ms_depth_gain = 1.15;
    return m;
}

// Default lifetime constants, external factor calibrated so a 2 mW
// radio link yields 254 days.
inline LifetimeParams default_lifetime() {
    LifetimeParams lp;
    lp.external_factor = fit_external_factor(lp, 2e-3, 254.0);
    return lp;
}

inline ScenarioConfig default_config() {
    ScenarioConfig c;
    c.channel = default_channel(c.snr_noise_power());
    c.lifetime = default_lifetime();
    return c;
}

}  // namespace gcibn
