#pragma once

// Closed-form distributions behind the grid partition (cell edge, cell
// counts, in-cell link length) with Monte Carlo validators, plus the
// post-clustering energy/lifetime report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcibn/channel.hpp"
#include "gcibn/core.hpp"
#include "gcibn/nico.hpp"
#include "gcibn/rng.hpp"

namespace gcibn {

// CDF of the grid edge when it is drawn uniformly from [1, c1].
inline double cdf_lambda(double lambda, double c1) {
    if (!(c1 > 1)) throw std::invalid_argument("cdf_lambda: c1 must exceed 1");
    if (lambda < 1) return 0.0;
    if (lambda > c1) return 1.0;
    return (lambda - 1) / (c1 - 1);
}

// CDF of the per-axis cell count ceil(extent/edge) for one axis of
// extent `extent`, edge uniform on [1, c1].
inline double cdf_cell_count(double p, double c1, double extent) {
    if (!(c1 > 1) || !(extent > 0)) throw std::invalid_argument("cdf_cell_count: bad parameters");
    if (p < std::ceil(extent / c1)) return 0.0;
    if (p >= extent) return 1.0;
    const double f = 1.0 - ((extent / p) - 1.0) / (c1 - 1.0);
    return std::clamp(f, 0.0, 1.0);
}

// Joint CDF of the total cell count over both axes (the two per-axis
// counts are independent).
inline double cdf_grid_count(double p, double q, double c1, double extent_x, double extent_y) {
    return cdf_cell_count(p, c1, extent_x) * cdf_cell_count(q, c1, extent_y);
}

// CDF of the planar distance between two independent uniform points in a
// square cell of edge `cell` (the in-cell node-relay link length).
inline double cdf_link_length(double r, double cell) {
    if (!(cell > 0)) throw std::invalid_argument("cdf_link_length: nonpositive cell");
    if (r < 0) return 0.0;
    const double t = r / cell;
    if (t < 1.0) {
        const double t2 = t * t;
        return t2 * (M_PI - (8.0 / 3.0) * t + 0.5 * t2);
    }
    if (t * t < 2.0) {
        const double t2 = t * t;
        const double s = std::sqrt(t2 - 1.0);
        return 1.0 / 3.0 - 2.0 * t2 - 0.5 * t2 * t2 + (4.0 / 3.0) * (2.0 * t2 + 1.0) * s +
               2.0 * t2 * std::asin(std::clamp((2.0 - t2) / t2, -1.0, 1.0));
    }
    return 1.0;
}

// Mean in-cell link length; linear in the cell edge.
inline double expected_link_length(double cell) {
    if (!(cell > 0)) throw std::invalid_argument("expected_link_length: nonpositive cell");
    constexpr double kSqrt2 = 1.4142135623730951;
    return cell * (std::log(1.0 + kSqrt2) / 3.0 + kSqrt2 * (1.0 + kSqrt2) / 15.0);
}

// ---- empirical validation ----------------------------------------------

// One-sample Kolmogorov-Smirnov distance; sorts its input.
template <typename Cdf>
double ks_distance(std::vector<double>& samples, Cdf&& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::fabs((i + 1) / n - f));
        d = std::max(d, std::fabs(i / n - f));
    }
    return d;
}

// KS distance for integer-valued samples, comparing at the atoms only.
template <typename Cdf>
double ks_distance_discrete(std::vector<double>& samples, Cdf&& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        d = std::max(d, std::fabs(j / n - cdf(samples[i])));
        i = j;
    }
    return d;
}

struct DistributionReport {
    std::string name;
    std::vector<std::pair<double, double>> closed_form;  // (x, F)
    std::vector<std::pair<double, double>> empirical;
    double ks = 0.0;
    std::size_t samples = 0;
};

namespace detail {

template <typename Cdf>
DistributionReport build_report(std::string name, std::vector<double>& samples, Cdf&& cdf,
                                double x_lo, double x_hi, bool discrete, int curve_points = 200) {
    DistributionReport rep;
    rep.name = std::move(name);
    rep.samples = samples.size();
    rep.ks = discrete ? ks_distance_discrete(samples, cdf) : ks_distance(samples, cdf);
    const double n = static_cast<double>(samples.size());
    for (int i = 0; i <= curve_points; ++i) {
        const double x = x_lo + (x_hi - x_lo) * i / curve_points;
        rep.closed_form.emplace_back(x, cdf(x));
        const auto it = std::upper_bound(samples.begin(), samples.end(), x);
        rep.empirical.emplace_back(x, static_cast<double>(it - samples.begin()) / n);
    }
    return rep;
}

}  // namespace detail

inline DistributionReport lambda_report(double c1, std::size_t n, std::uint64_t seed) {
    rng::Engine eng(seed);
    std::vector<double> samples(n);
    for (auto& s : samples) s = rng::uniform(eng, 1.0, c1);
    return detail::build_report("grid_edge", samples,
                                [c1](double x) { return cdf_lambda(x, c1); }, 1.0, c1, false);
}

inline DistributionReport cell_count_report(double c1, double extent, std::size_t n,
                                            std::uint64_t seed) {
    rng::Engine eng(seed);
    std::vector<double> samples(n);
    for (auto& s : samples) s = std::ceil(extent / rng::uniform(eng, 1.0, c1));
    return detail::build_report(
        "cell_count", samples, [c1, extent](double x) { return cdf_cell_count(x, c1, extent); },
        std::ceil(extent / c1), extent, true);
}

inline DistributionReport link_length_report(double cell, std::size_t n, std::uint64_t seed) {
    rng::Engine eng(seed);
    std::vector<double> samples(n);
    for (auto& s : samples) {
        const double dx = rng::uniform(eng, 0.0, cell) - rng::uniform(eng, 0.0, cell);
        const double dy = rng::uniform(eng, 0.0, cell) - rng::uniform(eng, 0.0, cell);
        s = std::sqrt(dx * dx + dy * dy);
    }
    return detail::build_report("link_length", samples,
                                [cell](double x) { return cdf_link_length(x, cell); }, 0.0,
                                cell * std::sqrt(2.0), false);
}

// Monte Carlo mean of the in-cell link length (the oracle for
// expected_link_length).
inline double mc_mean_link_length(double cell, std::size_t n, std::uint64_t seed) {
    rng::Engine eng(seed);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rng::uniform(eng, 0.0, cell) - rng::uniform(eng, 0.0, cell);
        const double dy = rng::uniform(eng, 0.0, cell) - rng::uniform(eng, 0.0, cell);
        sum += std::sqrt(dx * dx + dy * dy);
    }
    return sum / static_cast<double>(n);
}

// ---- post-clustering energy report --------------------------------------

struct MemberResidual {
    std::size_t node = 0;
    double lifetime_days = 0.0;
    double residual_fraction = 0.0;  // at the first implant death in the cluster
};

struct ClusterEnergy {
    std::size_t cluster = 0;
    std::size_t implants = 0;
    double first_implant_death_days = std::numeric_limits<double>::infinity();
    double implant_residual_min = 0.0;     // over implants surviving the first death
    double implant_residual_max = 0.0;
    double implant_residual_spread = 0.0;  // max - min
    double link_ratio = 1.0;               // min/max implant link length
    std::vector<MemberResidual> members;
};

struct EnergyReport {
    std::vector<ClusterEnergy> clusters;
    double network_lifetime_days = std::numeric_limits<double>::infinity();
};

// Residual energy left in each member when the first implant of its
// cluster dies, assuming linear drain over each node's own lifetime.
// The network lives until the earliest implant death anywhere.
inline EnergyReport energy_report(const NicoResult& result,
                                  const std::vector<NodeSpec>& nodes) {
    EnergyReport rep;
    for (std::size_t k = 0; k < result.state.clusters.size(); ++k) {
        const Cluster& c = result.state.clusters[k];
        ClusterEnergy ce;
        ce.cluster = k;

        double death = std::numeric_limits<double>::infinity();
        std::size_t dying = static_cast<std::size_t>(-1);
        double min_len = std::numeric_limits<double>::infinity(), max_len = 0.0;
        for (auto i : c.members) {
            if (!nodes[i].implant()) continue;
            ++ce.implants;
            const auto& o = result.per_node[i];
            if (o.lifetime_days < death) {
                death = o.lifetime_days;
                dying = i;
            }
            min_len = std::min(min_len, o.length);
            max_len = std::max(max_len, o.length);
        }
        if (ce.implants > 0) {
            ce.first_implant_death_days = death;
            ce.link_ratio = max_len > 0 ? min_len / max_len : 1.0;
            rep.network_lifetime_days = std::min(rep.network_lifetime_days, death);
        }

        double spread_lo = std::numeric_limits<double>::infinity(), spread_hi = 0.0;
        bool any_surviving_implant = false;
        for (auto i : c.members) {
            MemberResidual mr;
            mr.node = i;
            mr.lifetime_days = result.per_node[i].lifetime_days;
            if (ce.implants > 0) {
                mr.residual_fraction =
                    std::max(0.0, 1.0 - ce.first_implant_death_days / mr.lifetime_days);
            } else {
                mr.residual_fraction = 1.0;  // no implant death in this cluster
            }
            if (nodes[i].implant() && i != dying) {
                any_surviving_implant = true;
                spread_lo = std::min(spread_lo, mr.residual_fraction);
                spread_hi = std::max(spread_hi, mr.residual_fraction);
            }
            ce.members.push_back(mr);
        }
        if (any_surviving_implant) {
            ce.implant_residual_min = spread_lo;
            ce.implant_residual_max = spread_hi;
            ce.implant_residual_spread = spread_hi - spread_lo;
        }
        rep.clusters.push_back(std::move(ce));
    }
    return rep;
}

}  // namespace gcibn
