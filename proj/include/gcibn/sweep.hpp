#pragma once

// Parameter sweeps: the same scenario run over a list of values and a
// batch of derived seeds, aggregated into one summary row per value.
// Seeds run concurrently; aggregation order is fixed, so output is
// deterministic.

#include <cstdio>
#include <future>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcibn/rng.hpp"
#include "gcibn/scenario.hpp"

namespace gcibn {

enum class SweepParam { Alpha, Uniformity, ThresholdLength, FirstRate, NodeCount };

inline SweepParam parse_sweep_param(const std::string& s) {
    if (s == "alpha") return SweepParam::Alpha;
    if (s == "uniformity") return SweepParam::Uniformity;
    if (s == "lambda_th" || s == "threshold") return SweepParam::ThresholdLength;
    if (s == "eta1" || s == "rate1") return SweepParam::FirstRate;
    if (s == "n" || s == "count") return SweepParam::NodeCount;
    throw std::invalid_argument("unknown sweep parameter '" + s +
                                "' (expected alpha|uniformity|lambda_th|eta1|n)");
}

inline const char* sweep_param_name(SweepParam p) {
    switch (p) {
        case SweepParam::Alpha: return "alpha";
        case SweepParam::Uniformity: return "uniformity";
        case SweepParam::ThresholdLength: return "lambda_th";
        case SweepParam::FirstRate: return "eta1";
        case SweepParam::NodeCount: return "n";
    }
    return "?";
}

struct SweepRow {
    double value = 0.0;
    int seeds = 0;
    double mean_k = 0.0;
    double mean_icap_k = 0.0;        // occupied cells before optimization
    double mean_implant_len = 0.0;   // over implant links, all seeds
    double mean_first_len = 0.0;     // link of the first node
    double mean_pt_w = 0.0;
    double mean_lifetime_days = 0.0;
    double min_lifetime_days = 0.0;
};

namespace detail {

struct SeedStats {
    double k = 0.0;
    double icap_k = 0.0;
    double implant_len_sum = 0.0;
    std::size_t implant_count = 0;
    double first_len = 0.0;
    double pt_sum = 0.0;
    double lifetime_sum = 0.0;
    double lifetime_min = std::numeric_limits<double>::infinity();
    std::size_t node_count = 0;
};

inline SeedStats run_one(Scenario sc, SweepParam param, double value, std::uint64_t seed) {
    sc.seed = seed;
    switch (param) {
        case SweepParam::Alpha: sc.config.alpha = value; break;
        case SweepParam::Uniformity: sc.config.uniformity = value; break;
        case SweepParam::ThresholdLength:
            sc.config.threshold_ss = value;
            sc.config.threshold_ms = value;
            break;
        case SweepParam::FirstRate:
            break;  // applied after node materialization below
        case SweepParam::NodeCount:
            if (!sc.generator)
                throw std::invalid_argument("sweep over n requires a generator block");
            sc.generator->count = static_cast<std::size_t>(value);
            break;
    }
    if (param == SweepParam::FirstRate) {
        // Override the first node's rate; explicit nodes come first.
        if (!sc.nodes.empty()) {
            sc.nodes.front().rate = value;
        } else {
            // No explicit nodes: materialize, then pin the first one.
            Scenario tmp = sc;
            tmp.nodes = materialize_nodes(sc);
            tmp.generator.reset();
            tmp.nodes.front().rate = value;
            sc = std::move(tmp);
        }
    }

    const RunOutput out = run_scenario(sc);
    SeedStats st;
    st.k = static_cast<double>(out.nico.state.cluster_count());
    st.icap_k = static_cast<double>(out.grid.occupied);
    st.node_count = out.nodes.size();
    st.first_len = out.nico.per_node.front().length;
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        const auto& o = out.nico.per_node[i];
        st.pt_sum += o.pt_w;
        st.lifetime_sum += o.lifetime_days;
        st.lifetime_min = std::min(st.lifetime_min, o.lifetime_days);
        if (out.nodes[i].implant()) {
            st.implant_len_sum += o.length;
            ++st.implant_count;
        }
    }
    return st;
}

}  // namespace detail

inline std::vector<SweepRow> run_sweep(const Scenario& base, SweepParam param,
                                       const std::vector<double>& values, int seeds) {
    if (values.empty()) throw std::invalid_argument("sweep: empty value list");
    if (seeds < 1) throw std::invalid_argument("sweep: need at least one seed");

    std::vector<SweepRow> rows;
    for (double value : values) {
        std::vector<std::future<detail::SeedStats>> futures;
        futures.reserve(seeds);
        for (int s = 0; s < seeds; ++s) {
            const std::uint64_t seed = seeds == 1 ? base.seed : rng::derive_seed(base.seed, s);
            futures.push_back(std::async(std::launch::async, detail::run_one, base, param,
                                         value, seed));
        }
        SweepRow row;
        row.value = value;
        row.seeds = seeds;
        double implant_len_sum = 0.0, pt_sum = 0.0, life_sum = 0.0;
        std::size_t implant_count = 0, node_count = 0;
        row.min_lifetime_days = std::numeric_limits<double>::infinity();
        for (auto& f : futures) {
            const detail::SeedStats st = f.get();
            row.mean_k += st.k;
            row.mean_icap_k += st.icap_k;
            row.mean_first_len += st.first_len;
            implant_len_sum += st.implant_len_sum;
            implant_count += st.implant_count;
            pt_sum += st.pt_sum;
            life_sum += st.lifetime_sum;
            node_count += st.node_count;
            row.min_lifetime_days = std::min(row.min_lifetime_days, st.lifetime_min);
        }
        row.mean_k /= seeds;
        row.mean_icap_k /= seeds;
        row.mean_first_len /= seeds;
        row.mean_implant_len = implant_count ? implant_len_sum / implant_count : 0.0;
        row.mean_pt_w = node_count ? pt_sum / node_count : 0.0;
        row.mean_lifetime_days = node_count ? life_sum / node_count : 0.0;
        rows.push_back(row);
    }
    return rows;
}

inline std::string sweep_table(SweepParam param, const std::vector<SweepRow>& rows) {
    std::string text = std::string(sweep_param_name(param)) +
                       "\tseeds\tmean_K\tmean_icap_K\tmean_implant_len\tmean_first_len"
                       "\tmean_pt_w\tmean_lifetime_days\tmin_lifetime_days\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.9g\t%d\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\n",
                      r.value, r.seeds, r.mean_k, r.mean_icap_k, r.mean_implant_len,
                      r.mean_first_len, r.mean_pt_w, r.mean_lifetime_days,
                      r.min_lifetime_days);
        text += buf;
    }
    return text;
}

}  // namespace gcibn
