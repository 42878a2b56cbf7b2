#pragma once

// Relay position optimization for one cluster: minimize the weighted sum
// of link lengths, plus an L1 balance term over implants when a cluster
// holds more than one, subject to per-path threshold-length constraints.
// The problem is convex in the 2-D relay position; it is solved with a
// log-barrier interior method using damped Newton steps projected onto
// the surface rectangle. Kinks (Euclidean and L1) are smoothed with a
// fixed epsilon.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "gcibn/channel.hpp"
#include "gcibn/core.hpp"
#include "gcibn/thresholds.hpp"

namespace gcibn {

// One member as seen by the solver.
struct RelayMember {
    std::size_t node = 0;   // index into the scenario node list
    double x = 0.0, y = 0.0, z = 0.0;
    double weight = 1.0;
    bool implant = false;
    double limit = 0.0;     // link-length bound, cm
};

struct RelayProblem {
    std::vector<RelayMember> members;
    double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;  // surface rectangle
    double l1_penalty = 0.0;   // active (positive) only with more than one implant
    double smooth_eps = 1e-6;  // cm
    double mu0 = 0.1;          // initial barrier weight

    std::size_t implant_count() const {
        std::size_t n = 0;
        for (const auto& m : members) n += m.implant ? 1 : 0;
        return n;
    }
};

struct RelayResult {
    bool feasible = false;
    RelayPlacement relay;
    double objective = 0.0;               // barrier-free objective at `relay`
    std::vector<std::size_t> violating;   // node indices blocking feasibility
    int iterations = 0;
};

// Assembles the solver problem for a cluster. Weights follow the
// tissue/depth/rate metric; implants share the cluster-minimum
// muscle-path bound, surface nodes the scenario surface bound. The L1
// balance term switches on only when the cluster holds several implants.
inline RelayProblem make_relay_problem(const std::vector<NodeSpec>& nodes,
                                       const std::vector<std::size_t>& members,
                                       const ScenarioConfig& config,
                                       const Thresholds& thresholds,
                                       const TissueStack& stack) {
    if (members.empty()) throw std::invalid_argument("empty cluster");
    std::vector<double> rates;
    rates.reserve(members.size());
    for (auto i : members) rates.push_back(nodes[i].rate);

    double ms_limit = std::numeric_limits<double>::infinity();
    std::size_t implants = 0;
    for (auto i : members) {
        if (nodes[i].implant()) {
            ++implants;
            ms_limit = std::min(ms_limit, thresholds.per_node[i]);
        }
    }

    RelayProblem p;
    p.x_lo = stack.x1;
    p.x_hi = stack.x2;
    p.y_lo = stack.y1;
    p.y_hi = stack.y2;
    p.smooth_eps = config.smooth_eps;
    p.mu0 = config.barrier_mu;
    p.l1_penalty = implants > 1 ? config.l1_penalty : 0.0;
    p.members.reserve(members.size());
    for (auto i : members) {
        const NodeSpec& n = nodes[i];
        RelayMember m;
        m.node = i;
        m.x = n.x;
        m.y = n.y;
        m.z = n.z;
        m.weight = node_weight(n, rates, config.alpha, config.depth_scale);
        m.implant = n.implant();
        m.limit = m.implant ? ms_limit : thresholds.per_node[i];
        p.members.push_back(m);
    }
    return p;
}

// Barrier-free objective with exact kinks: what the solver ultimately
// minimizes and what brute-force verification evaluates.
inline double relay_objective(const RelayProblem& p, double rx, double ry) {
    double f = 0.0;
    for (const auto& m : p.members) {
        const double u = rx - m.x, v = ry - m.y;
        f += m.weight * std::sqrt(u * u + v * v + m.z * m.z);
        if (p.l1_penalty > 0 && m.implant)
            f += p.l1_penalty * m.weight * (std::fabs(u) + std::fabs(v));
    }
    return f;
}

inline bool relay_point_feasible(const RelayProblem& p, double rx, double ry,
                                 double tol = 0.0) {
    for (const auto& m : p.members) {
        const double u = rx - m.x, v = ry - m.y;
        if (std::sqrt(u * u + v * v + m.z * m.z) > m.limit + tol) return false;
    }
    return true;
}

namespace detail {

struct BarrierEval {
    double f = 0.0;
    double gx = 0.0, gy = 0.0;
    double hxx = 0.0, hxy = 0.0, hyy = 0.0;
    double min_slack = std::numeric_limits<double>::infinity();
    bool interior = true;
};

// Value/gradient/Hessian of the smoothed objective plus barrier at mu.
inline BarrierEval eval_barrier(const RelayProblem& p, double rx, double ry, double mu) {
    BarrierEval e;
    const double eps2 = p.smooth_eps * p.smooth_eps;
    for (const auto& m : p.members) {
        const double u = rx - m.x, v = ry - m.y;
        const double zz = m.z * m.z + eps2;
        const double L = std::sqrt(u * u + v * v + zz);
        const double L3 = L * L * L;
        const double lgx = u / L, lgy = v / L;          // grad of L
        const double lhxx = (v * v + zz) / L3;          // Hessian of L
        const double lhyy = (u * u + zz) / L3;
        const double lhxy = -u * v / L3;

        e.f += m.weight * L;
        e.gx += m.weight * lgx;
        e.gy += m.weight * lgy;
        e.hxx += m.weight * lhxx;
        e.hyy += m.weight * lhyy;
        e.hxy += m.weight * lhxy;

        if (p.l1_penalty > 0 && m.implant) {
            const double au = std::sqrt(u * u + eps2), av = std::sqrt(v * v + eps2);
            const double c = p.l1_penalty * m.weight;
            e.f += c * (au + av);
            e.gx += c * u / au;
            e.gy += c * v / av;
            e.hxx += c * eps2 / (au * au * au);
            e.hyy += c * eps2 / (av * av * av);
        }

        const double s = m.limit - L;
        e.min_slack = std::min(e.min_slack, s);
        if (s <= 0) {
            e.interior = false;
            continue;
        }
        if (mu > 0) {
            e.f -= mu * std::log(s);
            const double b1 = mu / s;
            e.gx += b1 * lgx;
            e.gy += b1 * lgy;
            const double b2 = mu / (s * s);
            e.hxx += b1 * lhxx + b2 * lgx * lgx;
            e.hyy += b1 * lhyy + b2 * lgy * lgy;
            e.hxy += b1 * lhxy + b2 * lgx * lgy;
        }
    }
    return e;
}

inline double clampd(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Feasibility restoration: minimize the squared hinge of constraint
// violations by projected gradient descent. Returns true when a strictly
// interior point was found (written to rx/ry); on failure rx/ry hold the
// least-violating point reached.
inline bool restore_feasible(const RelayProblem& p, double& rx, double& ry) {
    const double margin = 1e-7;
    const double eps2 = p.smooth_eps * p.smooth_eps;
    auto value_grad = [&](double x, double y, double& gx, double& gy) {
        double val = 0.0;
        gx = gy = 0.0;
        for (const auto& m : p.members) {
            const double u = x - m.x, v = y - m.y;
            const double L = std::sqrt(u * u + v * v + m.z * m.z + eps2);
            const double over = L - (m.limit - margin);
            if (over > 0) {
                val += over * over;
                gx += 2 * over * u / L;
                gy += 2 * over * v / L;
            }
        }
        return val;
    };

    double gx, gy;
    double val = value_grad(rx, ry, gx, gy);
    double step = 1.0;
    for (int it = 0; it < 5000 && val > 0; ++it) {
        const double gnorm = std::sqrt(gx * gx + gy * gy);
        if (gnorm < 1e-14) break;
        bool moved = false;
        for (int half = 0; half < 60; ++half) {
            const double cx = clampd(rx - step * gx, p.x_lo, p.x_hi);
            const double cy = clampd(ry - step * gy, p.y_lo, p.y_hi);
            double ngx, ngy;
            const double nval = value_grad(cx, cy, ngx, ngy);
            if (nval < val - 1e-12 * step * gnorm * gnorm) {
                rx = cx;
                ry = cy;
                val = nval;
                gx = ngx;
                gy = ngy;
                moved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    for (const auto& m : p.members) {
        const double u = rx - m.x, v = ry - m.y;
        if (std::sqrt(u * u + v * v + m.z * m.z) >= m.limit) return false;
    }
    return true;
}

}  // namespace detail

// Interior-point solve. Starts from the member centroid projected onto
// the surface rectangle; decays the barrier weight geometrically until
// its perturbation of the objective is negligible against the 1e-6
// verification tolerance.
inline RelayResult optimize_relay(const RelayProblem& p) {
    using detail::clampd;
    RelayResult res;
    if (p.members.empty()) throw std::invalid_argument("empty cluster");

    // Degenerate single-member cluster: the relay sits on the node.
    if (p.members.size() == 1) {
        const auto& m = p.members.front();
        const double rx = clampd(m.x, p.x_lo, p.x_hi);
        const double ry = clampd(m.y, p.y_lo, p.y_hi);
        const double u = rx - m.x, v = ry - m.y;
        const double L = std::sqrt(u * u + v * v + m.z * m.z);
        if (L > m.limit) {
            res.violating.push_back(m.node);
            res.relay = {rx, ry};
            return res;
        }
        res.feasible = true;
        res.relay = {rx, ry};
        res.objective = relay_objective(p, rx, ry);
        return res;
    }

    double rx = 0.0, ry = 0.0;
    for (const auto& m : p.members) {
        rx += m.x;
        ry += m.y;
    }
    rx = clampd(rx / p.members.size(), p.x_lo, p.x_hi);
    ry = clampd(ry / p.members.size(), p.y_lo, p.y_hi);

    // The barrier needs a strictly interior start.
    if (detail::eval_barrier(p, rx, ry, 0.0).min_slack <= 1e-9) {
        if (!detail::restore_feasible(p, rx, ry)) {
            for (const auto& m : p.members) {
                const double u = rx - m.x, v = ry - m.y;
                if (std::sqrt(u * u + v * v + m.z * m.z) >= m.limit)
                    res.violating.push_back(m.node);
            }
            res.relay = {rx, ry};
            return res;
        }
    }

    int iterations = 0;
    const double mu_min = 1e-12;
    for (double mu = p.mu0; mu > mu_min * 0.5; mu *= 0.5) {
        for (int it = 0; it < 60; ++it) {
            ++iterations;
            auto e = detail::eval_barrier(p, rx, ry, mu);
            // Projected gradient: drop components pushing out of the box.
            double pgx = e.gx, pgy = e.gy;
            if ((rx <= p.x_lo && pgx > 0) || (rx >= p.x_hi && pgx < 0)) pgx = 0;
            if ((ry <= p.y_lo && pgy > 0) || (ry >= p.y_hi && pgy < 0)) pgy = 0;
            const double gnorm = std::sqrt(pgx * pgx + pgy * pgy);
            if (gnorm <= 1e-11 * (1.0 + std::fabs(e.f))) break;

            // Newton direction from the 2x2 system, ridge-guarded.
            const double ridge = 1e-14 * (e.hxx + e.hyy);
            const double hxx = e.hxx + ridge, hyy = e.hyy + ridge;
            double det = hxx * hyy - e.hxy * e.hxy;
            double dx, dy;
            if (det > 0) {
                dx = (-e.gx * hyy + e.gy * e.hxy) / det;
                dy = (-e.gy * hxx + e.gx * e.hxy) / det;
            } else {
                dx = -e.gx;
                dy = -e.gy;
            }
            double slope = e.gx * dx + e.gy * dy;
            if (slope >= 0) {  // not a descent direction; fall back
                dx = -pgx;
                dy = -pgy;
                slope = -(pgx * pgx + pgy * pgy);
            }

            double t = 1.0;
            bool accepted = false;
            for (int half = 0; half < 60; ++half, t *= 0.5) {
                const double cx = clampd(rx + t * dx, p.x_lo, p.x_hi);
                const double cy = clampd(ry + t * dy, p.y_lo, p.y_hi);
                if (cx == rx && cy == ry) break;
                auto cand = detail::eval_barrier(p, cx, cy, mu);
                if (!cand.interior) continue;
                if (cand.f <= e.f + 1e-4 * t * slope) {
                    rx = cx;
                    ry = cy;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
        }
    }

    res.feasible = true;
    res.relay = {rx, ry};
    res.objective = relay_objective(p, rx, ry);
    res.iterations = iterations;
    return res;
}

inline RelayResult optimize_relay(const std::vector<NodeSpec>& nodes,
                                  const std::vector<std::size_t>& members,
                                  const ScenarioConfig& config, const Thresholds& thresholds,
                                  const TissueStack& stack) {
    return optimize_relay(make_relay_problem(nodes, members, config, thresholds, stack));
}

}  // namespace gcibn
