#pragma once

// Phase II: nearest-neighbor iterative cluster optimization. Each
// iteration optimizes every relay, evicts non-conforming nodes, assigns
// the not-clustered list to the nearest feasible relay, moves nodes that
// are strictly closer to a foreign relay, merges clusters whenever the
// union still satisfies every bound, and gives leftover nodes dedicated
// relays. The loop ends when an iteration changes nothing and every node
// is clustered.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gcibn/channel.hpp"
#include "gcibn/core.hpp"
#include "gcibn/relay.hpp"
#include "gcibn/thresholds.hpp"

namespace gcibn {

// Per-cluster constraint evaluation against the current relay position.
struct ConstraintReport {
    bool power = true;      // each member's required power within its cap
    bool length = true;     // each link within its path bound
    bool capacity = true;   // total rate within the outgoing-link capacity
    bool ordering = true;   // implant mean power well below surface mean
    bool uniform = true;    // implant link min/max ratio above the uniformity factor

    bool ok() const { return power && length && capacity && ordering && uniform; }
};

struct TraceRecord {
    int iteration = 0;
    std::string step;
    std::size_t clusters = 0;
    std::size_t unclustered = 0;
    double objective = 0.0;
};

struct NicoDiagnostics {
    int iterations = 0;
    bool converged = false;
    bool oscillation_guard = false;
    bool changed_last = false;
};

struct NodeOutcome {
    std::size_t cluster = 0;   // index into the final cluster vector
    double length = 0.0;       // cm
    double pt_w = 0.0;
    double lifetime_days = 0.0;
};

struct NicoResult {
    ClusterState state;
    std::vector<NodeOutcome> per_node;
    NicoDiagnostics diagnostics;
    std::vector<TraceRecord> trace;
};

class NicoEngine {
public:
    NicoEngine(const std::vector<NodeSpec>& nodes, const TissueStack& stack,
               const ScenarioConfig& config)
        : nodes_(nodes), stack_(stack), config_(config),
          thresholds_(compute_thresholds(config, nodes)) {}

    const Thresholds& thresholds() const { return thresholds_; }

    // Nodes that cannot be served even by a dedicated relay directly
    // above them (or whose rate alone overflows a cluster).
    std::vector<std::size_t> unreachable_nodes() const {
        std::vector<std::size_t> bad;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].rate > config_.capacity || nodes_[i].z > thresholds_.per_node[i])
                bad.push_back(i);
        }
        return bad;
    }

    NicoResult run(ClusterState state) {
        if (nodes_.empty()) throw std::invalid_argument("no nodes");
        if (auto bad = unreachable_nodes(); !bad.empty()) {
            std::string msg = "infeasible scenario, unreachable nodes:";
            for (auto i : bad) msg += " " + nodes_[i].id;
            throw std::domain_error(msg);
        }
        for (auto& c : state.clusters) c.uid = next_uid_++;

        NicoResult res;
        std::set<std::vector<std::size_t>> history;
        std::vector<std::size_t> key = membership_key(state);
        history.insert(key);

        for (int iter = 1; iter <= config_.max_iterations; ++iter) {
            res.diagnostics.iterations = iter;

            optimize_all(state);
            trace(res.trace, iter, "optimize", state);
            reform_all(state);
            trace(res.trace, iter, "reform", state);
            assign_nearest(state);
            trace(res.trace, iter, "assign", state);
            reassign_nodes(state);
            merge_clusters(state);
            trace(res.trace, iter, "reassign_merge", state);
            dedicate(state);
            trace(res.trace, iter, "dedicate", state);

            std::vector<std::size_t> after = membership_key(state);
            const bool changed = (after != key);
            res.diagnostics.changed_last = changed;
            if (!changed && state.unclustered.empty() &&
                state.cluster_count() <= nodes_.size()) {
                res.diagnostics.converged = true;
                break;
            }
            if (changed && history.count(after)) {
                // Membership state seen before: the loop would cycle.
                // Freeze memberships and finish with one relay pass.
                optimize_all(state);
                res.diagnostics.converged = true;
                res.diagnostics.oscillation_guard = true;
                res.diagnostics.changed_last = false;
                break;
            }
            history.insert(after);
            key = std::move(after);
        }

        res.per_node.resize(nodes_.size());
        for (std::size_t k = 0; k < state.clusters.size(); ++k) {
            for (auto i : state.clusters[k].members) {
                NodeOutcome& o = res.per_node[i];
                o.cluster = k;
                o.length = link_length(nodes_[i], state.clusters[k].relay);
                o.pt_w = pt_for_link(config_, nodes_[i], o.length);
                o.lifetime_days = node_lifetime_days(o.pt_w, config_.lifetime);
            }
        }
        res.state = std::move(state);
        return res;
    }

    // ---- step functions (public for direct exercise in tests) ----

    void optimize_all(ClusterState& state) {
        for (auto& c : state.clusters) {
            const RelayResult& r = cached_optimize(c);
            if (r.feasible) c.relay = r.relay;
        }
    }

    void reform_all(ClusterState& state) {
        for (std::size_t k = 0; k < state.clusters.size();) {
            if (reform_cluster(state, k)) continue;  // cluster k deleted
            ++k;
        }
    }

    // Returns true when the cluster was emptied and removed.
    bool reform_cluster(ClusterState& state, std::size_t k) {
        for (;;) {
            Cluster& c = state.clusters[k];
            const RelayResult r = cached_optimize(c);
            if (!r.feasible) {
                evict(state, k, pick_eviction(c, r.violating, r.relay));
                if (state.clusters[k].members.empty()) {
                    state.clusters.erase(state.clusters.begin() + k);
                    return true;
                }
                continue;
            }
            c.relay = r.relay;
            const ConstraintReport rep = check_cluster(c);
            if (!(rep.power && rep.length && rep.ordering && rep.uniform)) {
                evict(state, k, pick_eviction(c, c.members, c.relay));
            } else if (!rep.capacity) {
                evict(state, k, pick_rate_eviction(c));
            } else {
                return false;
            }
            if (state.clusters[k].members.empty()) {
                state.clusters.erase(state.clusters.begin() + k);
                return true;
            }
        }
    }

    void assign_nearest(ClusterState& state) {
        const std::vector<std::size_t> pending = state.unclustered;
        for (auto id : pending) {
            const std::size_t k = best_feasible_cluster(state, id,
                                                        std::numeric_limits<double>::infinity());
            if (k == kNone) continue;
            add_member(state.clusters[k], id);
            state.unclustered.erase(
                std::find(state.unclustered.begin(), state.unclustered.end(), id));
        }
    }

    // Moves nodes strictly closer to a foreign relay. Ties stay put.
    bool reassign_nodes(ClusterState& state) {
        bool changed = false;
        for (std::size_t id = 0; id < nodes_.size(); ++id) {
            const std::size_t own = owner_of(state, id);
            if (own == kNone) continue;
            const double own_len = link_length(nodes_[id], state.clusters[own].relay);
            const std::size_t target = best_feasible_cluster(state, id, own_len, own);
            if (target == kNone) continue;
            remove_member(state, own, id);
            // Removal may erase the (emptied) source cluster, shifting
            // indices above it.
            const std::size_t adj = (own < target && state_cluster_removed_) ? target - 1 : target;
            add_member(state.clusters[adj], id);
            changed = true;
        }
        return changed;
    }

    // Pairwise merging: commit any union that still satisfies every
    // bound with a re-optimized relay. Keeps scanning until no pair
    // merges.
    bool merge_clusters(ClusterState& state) {
        bool changed = false;
        bool merged = true;
        while (merged) {
            merged = false;
            for (std::size_t a = 0; a < state.clusters.size() && !merged; ++a) {
                for (std::size_t b = a + 1; b < state.clusters.size() && !merged; ++b) {
                    if (try_merge(state, a, b)) {
                        changed = merged = true;
                    }
                }
            }
        }
        return changed;
    }

    void dedicate(ClusterState& state) {
        for (auto id : state.unclustered) {
            Cluster c;
            c.members = {id};
            c.uid = next_uid_++;
            const RelayResult r = cached_optimize(c);
            c.relay = r.relay;  // feasible by the reachability pre-check
            state.clusters.push_back(std::move(c));
        }
        state.unclustered.clear();
    }

    ConstraintReport check_cluster(const Cluster& c) const {
        ConstraintReport rep;
        const RelayProblem p = make_relay_problem(nodes_, c.members, config_, thresholds_, stack_);
        std::vector<double> implant_lengths;
        double implant_pt = 0.0, surface_pt = 0.0;
        std::size_t implants = 0, surfaces = 0;
        double rate_sum = 0.0;
        for (const auto& m : p.members) {
            const NodeSpec& node = nodes_[m.node];
            const double len = link_length(node, c.relay);
            if (len > m.limit + kLengthSlack) rep.length = false;
            const double pt = pt_for_link(config_, node, len);
            if (pt > pt_max(config_, node) * (1 + 1e-9)) rep.power = false;
            rate_sum += node.rate;
            if (m.implant) {
                ++implants;
                implant_pt += pt;
                implant_lengths.push_back(len);
            } else {
                ++surfaces;
                surface_pt += pt;
            }
        }
        rep.capacity = !c.members.empty() && rate_sum <= config_.capacity + 1e-12;
        if (implants > 0 && surfaces > 0) {
            rep.ordering = implant_pt / implants <=
                           config_.power_ratio * (surface_pt / surfaces) + 1e-15;
        }
        rep.uniform = uniformity_ok(implant_lengths, config_.uniformity);
        return rep;
    }

    double total_objective(const ClusterState& state) const {
        double sum = 0.0;
        for (const auto& c : state.clusters) {
            const RelayProblem p =
                make_relay_problem(nodes_, c.members, config_, thresholds_, stack_);
            sum += relay_objective(p, c.relay.x, c.relay.y);
        }
        return sum;
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    static constexpr double kLengthSlack = 1e-9;

    const std::vector<NodeSpec>& nodes_;
    TissueStack stack_;
    ScenarioConfig config_;
    Thresholds thresholds_;
    std::uint64_t next_uid_ = 1;
    std::map<std::uint64_t, RelayResult> relay_cache_;
    std::set<std::pair<std::uint64_t, std::uint64_t>> merge_rejects_;
    bool state_cluster_removed_ = false;

    const RelayResult& cached_optimize(const Cluster& c) {
        auto it = relay_cache_.find(c.uid);
        if (it != relay_cache_.end()) return it->second;
        RelayResult r =
            optimize_relay(nodes_, c.members, config_, thresholds_, stack_);
        return relay_cache_.emplace(c.uid, std::move(r)).first->second;
    }

    void trace(std::vector<TraceRecord>& sink, int iter, const char* step,
               const ClusterState& state) const {
        sink.push_back({iter, step, state.cluster_count(), state.unclustered.size(),
                        total_objective(state)});
    }

    std::vector<std::size_t> membership_key(const ClusterState& state) const {
        std::vector<std::vector<std::size_t>> groups;
        groups.reserve(state.clusters.size());
        for (const auto& c : state.clusters) groups.push_back(c.members);
        std::sort(groups.begin(), groups.end());
        std::vector<std::size_t> key;
        for (const auto& g : groups) {
            key.insert(key.end(), g.begin(), g.end());
            key.push_back(kNone);  // group separator
        }
        key.push_back(kNone - 1);
        key.insert(key.end(), state.unclustered.begin(), state.unclustered.end());
        return key;
    }

    std::size_t owner_of(const ClusterState& state, std::size_t id) const {
        for (std::size_t k = 0; k < state.clusters.size(); ++k) {
            const auto& mem = state.clusters[k].members;
            if (std::binary_search(mem.begin(), mem.end(), id)) return k;
        }
        return kNone;
    }

    void add_member(Cluster& c, std::size_t id) {
        c.members.insert(std::upper_bound(c.members.begin(), c.members.end(), id), id);
        c.uid = next_uid_++;
    }

    // Removes a node; erases the cluster if emptied (sets the removal
    // flag consumed by reassign_nodes for index adjustment).
    void remove_member(ClusterState& state, std::size_t k, std::size_t id) {
        auto& mem = state.clusters[k].members;
        mem.erase(std::find(mem.begin(), mem.end(), id));
        state_cluster_removed_ = mem.empty();
        if (state_cluster_removed_) {
            state.clusters.erase(state.clusters.begin() + k);
        } else {
            state.clusters[k].uid = next_uid_++;
        }
    }

    void evict(ClusterState& state, std::size_t k, std::size_t id) {
        auto& mem = state.clusters[k].members;
        mem.erase(std::find(mem.begin(), mem.end(), id));
        if (!mem.empty()) state.clusters[k].uid = next_uid_++;
        state.unclustered.insert(
            std::upper_bound(state.unclustered.begin(), state.unclustered.end(), id), id);
    }

    // Longest-link implant among the candidates, falling back to the
    // longest-link candidate of any kind when no implant is present.
    std::size_t pick_eviction(const Cluster& c, const std::vector<std::size_t>& candidates,
                              const RelayPlacement& relay) const {
        std::size_t best = kNone;
        double best_len = -1.0;
        bool best_implant = false;
        for (auto id : candidates) {
            const bool imp = nodes_[id].implant();
            const double len = link_length(nodes_[id], relay);
            if (best == kNone || (imp && !best_implant) ||
                (imp == best_implant && len > best_len)) {
                best = id;
                best_len = len;
                best_implant = imp;
            }
        }
        return best;
    }

    // Highest-rate member; rate ties broken by longer link, then index.
    std::size_t pick_rate_eviction(const Cluster& c) const {
        std::size_t best = c.members.front();
        double best_rate = nodes_[best].rate;
        double best_len = link_length(nodes_[best], c.relay);
        for (auto id : c.members) {
            const double rate = nodes_[id].rate;
            const double len = link_length(nodes_[id], c.relay);
            if (rate > best_rate || (rate == best_rate && len > best_len)) {
                best = id;
                best_rate = rate;
                best_len = len;
            }
        }
        return best;
    }

    // Nearest cluster (by link length, then load, then rate sum, then
    // index) whose fixed relay can accept the node within every bound.
    // Only clusters strictly closer than `closer_than` are considered.
    std::size_t best_feasible_cluster(const ClusterState& state, std::size_t id,
                                      double closer_than, std::size_t exclude = kNone) {
        struct Candidate {
            double len;
            std::size_t size;
            double rate_sum;
            std::size_t k;
        };
        std::vector<Candidate> cands;
        for (std::size_t k = 0; k < state.clusters.size(); ++k) {
            if (k == exclude) continue;
            const Cluster& c = state.clusters[k];
            const double len = link_length(nodes_[id], c.relay);
            if (!(len < closer_than)) continue;
            double rate_sum = 0.0;
            for (auto m : c.members) rate_sum += nodes_[m].rate;
            cands.push_back({len, c.size(), rate_sum, k});
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.len != b.len) return a.len < b.len;
            if (a.size != b.size) return a.size < b.size;
            if (a.rate_sum != b.rate_sum) return a.rate_sum < b.rate_sum;
            return a.k < b.k;
        });
        for (const auto& cand : cands) {
            Cluster probe = state.clusters[cand.k];
            probe.members.insert(
                std::upper_bound(probe.members.begin(), probe.members.end(), id), id);
            if (check_cluster(probe).ok()) return cand.k;
        }
        return kNone;
    }

    bool try_merge(ClusterState& state, std::size_t a, std::size_t b) {
        Cluster& ca = state.clusters[a];
        Cluster& cb = state.clusters[b];
        const auto reject_key = std::minmax(ca.uid, cb.uid);
        if (merge_rejects_.count(reject_key)) return false;

        double rate_sum = 0.0;
        double max_limit = 0.0;
        for (const auto* c : {&ca, &cb}) {
            for (auto m : c->members) {
                rate_sum += nodes_[m].rate;
                max_limit = std::max(max_limit, thresholds_.per_node[m]);
            }
        }
        const double dx = ca.relay.x - cb.relay.x, dy = ca.relay.y - cb.relay.y;
        if (rate_sum > config_.capacity + 1e-12 ||
            dx * dx + dy * dy > 16.0 * max_limit * max_limit) {
            merge_rejects_.insert(reject_key);
            return false;
        }

        Cluster merged;
        merged.members.resize(ca.members.size() + cb.members.size());
        std::merge(ca.members.begin(), ca.members.end(), cb.members.begin(), cb.members.end(),
                   merged.members.begin());
        const RelayResult r =
            optimize_relay(nodes_, merged.members, config_, thresholds_, stack_);
        if (!r.feasible) {
            merge_rejects_.insert(reject_key);
            return false;
        }
        merged.relay = r.relay;
        if (!check_cluster(merged).ok()) {
            merge_rejects_.insert(reject_key);
            return false;
        }
        merged.uid = next_uid_++;
        relay_cache_.emplace(merged.uid, r);
        state.clusters[a] = std::move(merged);
        state.clusters.erase(state.clusters.begin() + b);
        return true;
    }
};

}  // namespace gcibn
