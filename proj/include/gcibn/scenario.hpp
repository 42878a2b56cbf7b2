#pragma once

// Scenario files, node generation and run orchestration. Scenarios and
// results use one JSON format; all randomness flows from the scenario
// seed through the deterministic generator, so identical (file, seed)
// pairs produce byte-identical outputs.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcibn/analytics.hpp"
#include "gcibn/channel.hpp"
#include "gcibn/core.hpp"
#include "gcibn/icap.hpp"
#include "gcibn/nico.hpp"
#include "gcibn/rng.hpp"
#include "gcibn/thresholds.hpp"

namespace gcibn {

using json = nlohmann::ordered_json;

struct GeneratorSpec {
    std::size_t count = 0;
    double implant_fraction = 0.5;
    double rate_min = 1.0, rate_max = 5.0;
    std::optional<std::pair<double, double>> x_range;      // default: surface extent
    std::optional<std::pair<double, double>> y_range;
    std::optional<std::pair<double, double>> depth_range;  // default: [0, muscle]
    double energy = 2592.0;
    double lifetime_s = 3e5;
    int modulation = 2;
};

struct SweepSpec {
    std::string param;
    std::vector<double> values;
    int seeds = 1;
};

struct Scenario {
    TissueStack stack;
    ScenarioConfig config = default_config();
    std::vector<NodeSpec> nodes;             // explicit nodes
    std::optional<GeneratorSpec> generator;  // appended after explicit nodes
    std::uint64_t seed = 1;
    std::optional<SweepSpec> sweep;
};

namespace detail {

// Typed field access with path context in error messages.
template <typename T>
T field(const json& j, const char* name, T fallback) {
    if (!j.contains(name)) return fallback;
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario field '") + name + "': " + e.what());
    }
}

inline std::pair<double, double> range_field(const json& j, const char* name,
                                             std::pair<double, double> fallback) {
    if (!j.contains(name)) return fallback;
    const auto& v = j.at(name);
    if (!v.is_array() || v.size() != 2)
        throw std::invalid_argument(std::string("scenario field '") + name +
                                    "': expected [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline std::string format_double(double v) {
    // json round-trips doubles exactly; this is for text tables only.
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace detail

inline Tissue parse_tissue(const std::string& s) {
    if (s == "skin" || s == "S" || s == "surface") return Tissue::Skin;
    if (s == "muscle" || s == "M" || s == "implant") return Tissue::Muscle;
    throw std::invalid_argument("unknown tissue '" + s + "'");
}

inline const char* tissue_name(Tissue t) { return t == Tissue::Skin ? "skin" : "muscle"; }

inline Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario parse error: ") + e.what());
    }

    Scenario sc;
    sc.seed = detail::field<std::uint64_t>(j, "seed", 1);

    if (j.contains("tissue")) {
        const json& t = j.at("tissue");
        auto xr = detail::range_field(t, "x_range", {sc.stack.x1, sc.stack.x2});
        auto yr = detail::range_field(t, "y_range", {sc.stack.y1, sc.stack.y2});
        sc.stack.x1 = xr.first;
        sc.stack.x2 = xr.second;
        sc.stack.y1 = yr.first;
        sc.stack.y2 = yr.second;
        sc.stack.skin = detail::field(t, "skin", sc.stack.skin);
        sc.stack.fat = detail::field(t, "fat", sc.stack.fat);
        sc.stack.muscle = detail::field(t, "muscle", sc.stack.muscle);
    }

    if (j.contains("config")) {
        const json& c = j.at("config");
        ScenarioConfig& cfg = sc.config;
        cfg.alpha = detail::field(c, "alpha", cfg.alpha);
        cfg.uniformity = detail::field(c, "uniformity", cfg.uniformity);
        cfg.capacity = detail::field(c, "capacity", cfg.capacity);
        cfg.snr_target = detail::field(c, "snr_target", cfg.snr_target);
        cfg.snr_is_db = detail::field(c, "snr_is_db", cfg.snr_is_db);
        cfg.noise_psd = detail::field(c, "noise_psd", cfg.noise_psd);
        cfg.bandwidth = detail::field(c, "bandwidth", cfg.bandwidth);
        cfg.safe_power = detail::field(c, "safe_power", cfg.safe_power);
        cfg.power_ratio = detail::field(c, "power_ratio", cfg.power_ratio);
        cfg.depth_scale = detail::field(c, "depth_scale", cfg.depth_scale);
        cfg.max_iterations = detail::field(c, "max_iterations", cfg.max_iterations);
        cfg.l1_penalty = detail::field(c, "l1_penalty", cfg.l1_penalty);
        cfg.barrier_mu = detail::field(c, "barrier_mu", cfg.barrier_mu);
        cfg.smooth_eps = detail::field(c, "smooth_eps", cfg.smooth_eps);
        if (c.contains("threshold_ss")) cfg.threshold_ss = c.at("threshold_ss").get<double>();
        if (c.contains("threshold_ms")) cfg.threshold_ms = c.at("threshold_ms").get<double>();
        if (c.contains("channel")) {
            const json& ch = c.at("channel");
            auto parse_path = [](const json& p, PathParams& out) {
                out.g0 = detail::field(p, "g0", out.g0);
                out.n = detail::field(p, "n", out.n);
                out.ref_length = detail::field(p, "ref_length", out.ref_length);
            };
            if (ch.contains("ss")) parse_path(ch.at("ss"), cfg.channel.ss);
            if (ch.contains("ms")) parse_path(ch.at("ms"), cfg.channel.ms);
            cfg.channel.ms_depth_gain =
                detail::field(ch, "ms_depth_gain", cfg.channel.ms_depth_gain);
        }
        if (c.contains("lifetime")) {
            const json& lt = c.at("lifetime");
            LifetimeParams& lp = cfg.lifetime;
            lp.battery_mah = detail::field(lt, "battery_mah", lp.battery_mah);
            lp.duty_cycle = detail::field(lt, "duty_cycle", lp.duty_cycle);
            lp.overhead_w = detail::field(lt, "overhead_w", lp.overhead_w);
            lp.voltage = detail::field(lt, "voltage", lp.voltage);
            lp.external_factor = detail::field(lt, "external_factor", lp.external_factor);
        }
    }

    if (j.contains("nodes")) {
        for (const auto& nj : j.at("nodes")) {
            NodeSpec n;
            n.id = detail::field<std::string>(nj, "id", "");
            if (n.id.empty())
                throw std::invalid_argument("scenario field 'nodes': node without id");
            n.x = detail::field(nj, "x", 0.0);
            n.y = detail::field(nj, "y", 0.0);
            n.z = detail::field(nj, "z", 0.0);
            n.tissue = parse_tissue(detail::field<std::string>(nj, "tissue", "skin"));
            n.rate = detail::field(nj, "rate", 1.0);
            n.energy = detail::field(nj, "energy", n.energy);
            n.lifetime_s = detail::field(nj, "lifetime_s", n.lifetime_s);
            n.modulation = detail::field(nj, "modulation", n.modulation);
            sc.nodes.push_back(std::move(n));
        }
    }

    if (j.contains("generate")) {
        const json& g = j.at("generate");
        GeneratorSpec spec;
        spec.count = detail::field<std::size_t>(g, "count", 0);
        spec.implant_fraction = detail::field(g, "implant_fraction", spec.implant_fraction);
        auto rr = detail::range_field(g, "rate_range", {spec.rate_min, spec.rate_max});
        spec.rate_min = rr.first;
        spec.rate_max = rr.second;
        if (g.contains("x_range")) spec.x_range = detail::range_field(g, "x_range", {0, 0});
        if (g.contains("y_range")) spec.y_range = detail::range_field(g, "y_range", {0, 0});
        if (g.contains("depth_range"))
            spec.depth_range = detail::range_field(g, "depth_range", {0, 0});
        spec.energy = detail::field(g, "energy", spec.energy);
        spec.lifetime_s = detail::field(g, "lifetime_s", spec.lifetime_s);
        spec.modulation = detail::field(g, "modulation", spec.modulation);
        sc.generator = spec;
    }

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        SweepSpec sw;
        sw.param = detail::field<std::string>(s, "param", "");
        sw.seeds = detail::field(s, "seeds", 1);
        if (s.contains("values"))
            for (const auto& v : s.at("values")) sw.values.push_back(v.get<double>());
        sc.sweep = sw;
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

// Explicit nodes plus deterministically generated ones. Generated ids
// are zero-padded so lexicographic order matches creation order.
inline std::vector<NodeSpec> materialize_nodes(const Scenario& sc) {
    std::vector<NodeSpec> nodes = sc.nodes;
    if (sc.generator) {
        const GeneratorSpec& g = *sc.generator;
        rng::Engine eng(sc.seed);
        const auto xr = g.x_range.value_or(std::make_pair(sc.stack.x1, sc.stack.x2));
        const auto yr = g.y_range.value_or(std::make_pair(sc.stack.y1, sc.stack.y2));
        const auto zr = g.depth_range.value_or(std::make_pair(0.0, sc.stack.muscle));
        for (std::size_t i = 0; i < g.count; ++i) {
            NodeSpec n;
            char id[16];
            std::snprintf(id, sizeof id, "n%03zu", nodes.size() + 1);
            n.id = id;
            n.x = rng::uniform(eng, xr.first, xr.second);
            n.y = rng::uniform(eng, yr.first, yr.second);
            const bool implant = rng::unit(eng) < g.implant_fraction;
            n.tissue = implant ? Tissue::Muscle : Tissue::Skin;
            n.z = implant ? rng::uniform(eng, zr.first, zr.second) : 0.0;
            n.rate = rng::uniform(eng, g.rate_min, g.rate_max);
            n.energy = g.energy;
            n.lifetime_s = g.lifetime_s;
            n.modulation = g.modulation;
            nodes.push_back(std::move(n));
        }
    }
    return nodes;
}

struct RunOutput {
    std::vector<NodeSpec> nodes;
    Thresholds thresholds;
    GridSpec grid;
    NicoResult nico;
    EnergyReport energy;
};

inline RunOutput run_scenario(const Scenario& sc) {
    sc.stack.validate();
    sc.config.validate();

    RunOutput out;
    out.nodes = materialize_nodes(sc);
    if (out.nodes.empty()) throw std::invalid_argument("no nodes");
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        out.nodes[i].validate(sc.stack);
        for (std::size_t k = i + 1; k < out.nodes.size(); ++k)
            if (out.nodes[i].id == out.nodes[k].id)
                throw std::invalid_argument("duplicate node id '" + out.nodes[i].id + "'");
    }

    NicoEngine engine(out.nodes, sc.stack, sc.config);
    out.thresholds = engine.thresholds();

    const double cell = grid_size(out.thresholds.ss, out.thresholds.global_ms);
    PartitionResult part = partition(out.nodes, sc.stack, cell);
    out.grid = part.grid;
    out.nico = engine.run(std::move(part.state));
    out.energy = energy_report(out.nico, out.nodes);
    return out;
}

// ---- result serialization ------------------------------------------------

namespace detail {

// Output order: clusters by relay coordinates, members by node id.
inline std::vector<std::size_t> sorted_cluster_order(const RunOutput& out) {
    std::vector<std::size_t> order(out.nico.state.clusters.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = out.nico.state.clusters[a].relay;
        const auto& rb = out.nico.state.clusters[b].relay;
        if (ra.x != rb.x) return ra.x < rb.x;
        if (ra.y != rb.y) return ra.y < rb.y;
        return out.nodes[out.nico.state.clusters[a].members.front()].id <
               out.nodes[out.nico.state.clusters[b].members.front()].id;
    });
    return order;
}

inline std::vector<std::size_t> sorted_by_id(const std::vector<std::size_t>& members,
                                             const std::vector<NodeSpec>& nodes) {
    std::vector<std::size_t> m = members;
    std::sort(m.begin(), m.end(),
              [&](std::size_t a, std::size_t b) { return nodes[a].id < nodes[b].id; });
    return m;
}

}  // namespace detail

inline json result_json(const RunOutput& out) {
    json j;
    j["cluster_count"] = out.nico.state.cluster_count();
    j["iterations"] = out.nico.diagnostics.iterations;
    j["converged"] = out.nico.diagnostics.converged;
    j["oscillation_guard"] = out.nico.diagnostics.oscillation_guard;
    j["grid"] = {{"cell", out.grid.cell},
                 {"nx", out.grid.nx},
                 {"ny", out.grid.ny},
                 {"geometric_cells", out.grid.geometric_cells},
                 {"occupied", out.grid.occupied}};
    j["thresholds"] = {{"ss", out.thresholds.ss},
                       {"ms_global", std::isfinite(out.thresholds.global_ms)
                                         ? json(out.thresholds.global_ms)
                                         : json(nullptr)}};
    j["clusters"] = json::array();
    for (auto k : detail::sorted_cluster_order(out)) {
        const Cluster& c = out.nico.state.clusters[k];
        json cj;
        cj["relay"] = {{"x", c.relay.x}, {"y", c.relay.y}};
        std::size_t implants = 0;
        double rate_sum = 0;
        for (auto i : c.members) {
            implants += out.nodes[i].implant() ? 1 : 0;
            rate_sum += out.nodes[i].rate;
        }
        cj["implants"] = implants;
        cj["rate_sum"] = rate_sum;
        cj["members"] = json::array();
        for (auto i : detail::sorted_by_id(c.members, out.nodes)) {
            const auto& o = out.nico.per_node[i];
            cj["members"].push_back({{"id", out.nodes[i].id},
                                     {"x", out.nodes[i].x},
                                     {"y", out.nodes[i].y},
                                     {"z", out.nodes[i].z},
                                     {"tissue", tissue_name(out.nodes[i].tissue)},
                                     {"rate", out.nodes[i].rate},
                                     {"length_cm", o.length},
                                     {"pt_w", o.pt_w},
                                     {"lifetime_days", o.lifetime_days}});
        }
        j["clusters"].push_back(std::move(cj));
    }
    j["unclustered"] = json::array();
    for (auto i : out.nico.state.unclustered) j["unclustered"].push_back(out.nodes[i].id);
    return j;
}

inline json energy_json(const RunOutput& out) {
    json j;
    j["network_lifetime_days"] = std::isfinite(out.energy.network_lifetime_days)
                                     ? json(out.energy.network_lifetime_days)
                                     : json(nullptr);
    j["clusters"] = json::array();
    for (auto k : detail::sorted_cluster_order(out)) {
        const ClusterEnergy& ce = out.energy.clusters[k];
        json cj;
        cj["implants"] = ce.implants;
        cj["first_implant_death_days"] = std::isfinite(ce.first_implant_death_days)
                                             ? json(ce.first_implant_death_days)
                                             : json(nullptr);
        cj["implant_residual_min"] = ce.implant_residual_min;
        cj["implant_residual_max"] = ce.implant_residual_max;
        cj["implant_residual_spread"] = ce.implant_residual_spread;
        cj["link_ratio"] = ce.link_ratio;
        cj["members"] = json::array();
        std::vector<MemberResidual> members = ce.members;
        std::sort(members.begin(), members.end(),
                  [&](const MemberResidual& a, const MemberResidual& b) {
                      return out.nodes[a.node].id < out.nodes[b.node].id;
                  });
        for (const auto& mr : members) {
            cj["members"].push_back({{"id", out.nodes[mr.node].id},
                                     {"lifetime_days", mr.lifetime_days},
                                     {"residual_fraction", mr.residual_fraction}});
        }
        j["clusters"].push_back(std::move(cj));
    }
    return j;
}

inline std::string trace_text(const NicoResult& result) {
    std::string text;
    for (const auto& r : result.trace) {
        text += "iter=" + std::to_string(r.iteration) + " step=" + r.step +
                " K=" + std::to_string(r.clusters) + " NL=" + std::to_string(r.unclustered) +
                " objective=" + detail::format_double(r.objective) + "\n";
    }
    return text;
}

// Re-parses a result file into memberships and relay placements; used to
// verify results round-trip losslessly.
inline ClusterState parse_result(const json& j, const std::vector<NodeSpec>& nodes) {
    auto index_of = [&](const std::string& id) {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].id == id) return i;
        throw std::invalid_argument("result references unknown node '" + id + "'");
    };
    ClusterState state;
    for (const auto& cj : j.at("clusters")) {
        Cluster c;
        c.relay.x = cj.at("relay").at("x").get<double>();
        c.relay.y = cj.at("relay").at("y").get<double>();
        for (const auto& mj : cj.at("members"))
            c.members.push_back(index_of(mj.at("id").get<std::string>()));
        std::sort(c.members.begin(), c.members.end());
        state.clusters.push_back(std::move(c));
    }
    for (const auto& id : j.at("unclustered"))
        state.unclustered.push_back(index_of(id.get<std::string>()));
    std::sort(state.unclustered.begin(), state.unclustered.end());
    return state;
}

// Membership/relay equality between two states (cluster order ignored).
inline bool same_topology(const ClusterState& a, const ClusterState& b) {
    if (a.clusters.size() != b.clusters.size() || a.unclustered != b.unclustered) return false;
    auto canon = [](const ClusterState& s) {
        std::vector<std::pair<std::vector<std::size_t>, std::pair<double, double>>> v;
        for (const auto& c : s.clusters)
            v.push_back({c.members, {c.relay.x, c.relay.y}});
        std::sort(v.begin(), v.end());
        return v;
    };
    return canon(a) == canon(b);
}

}  // namespace gcibn
