// Command-line front end: scenario runs, parameter sweeps, channel
// calibration from measurement files, and distribution analysis dumps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gcibn/analytics.hpp"
#include "gcibn/calibrate.hpp"
#include "gcibn/scenario.hpp"
#include "gcibn/sweep.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Nearest-relay region raster over the surface, for plotting the relay
// service regions.
std::string voronoi_dump(const gcibn::RunOutput& out, const gcibn::TissueStack& stack,
                         double step) {
    std::string text = "x\ty\tcluster\n";
    const auto order = gcibn::detail::sorted_cluster_order(out);
    char buf[96];
    for (double y = stack.y1; y <= stack.y2 + 1e-9; y += step) {
        for (double x = stack.x1; x <= stack.x2 + 1e-9; x += step) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::max();
            for (std::size_t oi = 0; oi < order.size(); ++oi) {
                const auto& r = out.nico.state.clusters[order[oi]].relay;
                const double d = (r.x - x) * (r.x - x) + (r.y - y) * (r.y - y);
                if (d < best_d) {
                    best_d = d;
                    best = oi;
                }
            }
            std::snprintf(buf, sizeof buf, "%.9g\t%.9g\t%zu\n", x, y, best);
            text += buf;
        }
    }
    return text;
}

std::string cdf_pairs_text(const std::vector<std::pair<double, double>>& closed,
                           const std::vector<std::pair<double, double>>& empirical) {
    std::string text = "x\tclosed_form\tempirical\n";
    char buf[96];
    for (std::size_t i = 0; i < closed.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g\t%.9g\t%.9g\n", closed[i].first,
                      closed[i].second, empirical[i].second);
        text += buf;
    }
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GC-IBN topology synthesis: energy-balanced clustering and relay placement"};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------
    std::string scenario_path, out_dir = "out", voronoi_path;
    bool trace_stdout = false;
    double voronoi_step = 1.0;
    auto* run = app.add_subcommand("run", "Run one scenario and write result files");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--trace", trace_stdout, "print per-iteration trace to stdout");
    run->add_option("--voronoi", voronoi_path, "write nearest-relay region raster to this file");
    run->add_option("--voronoi-step", voronoi_step, "raster step in cm");

    // --- sweep -------------------------------------------------------
    std::string sweep_param_s;
    std::vector<double> sweep_values;
    int sweep_seeds = 0;
    auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over a value list");
    sweep->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sweep->add_option("--param", sweep_param_s, "alpha|uniformity|lambda_th|eta1|n");
    sweep->add_option("--values", sweep_values, "value list")->delimiter(',');
    sweep->add_option("--seeds", sweep_seeds, "repetitions per value");
    sweep->add_option("--out", out_dir, "output directory");

    // --- calibrate ---------------------------------------------------
    std::string measurements_path;
    double cal_snr = 5.0, cal_noise_psd = 1e-13, cal_bandwidth = 1e4;
    auto* cal = app.add_subcommand("calibrate",
                                   "Fit channel parameters to (path,length_cm,pt_mw) rows");
    cal->add_option("measurements", measurements_path, "delimited measurement file")->required();
    cal->add_option("--snr", cal_snr, "target SNR (linear)");
    cal->add_option("--noise-psd", cal_noise_psd, "noise PSD, W/Hz");
    cal->add_option("--bandwidth", cal_bandwidth, "receiver bandwidth, Hz");

    // --- analyze -----------------------------------------------------
    double an_c1 = 10.6066, an_extent_x = 100.0, an_extent_y = 100.0, an_cell = 10.6066;
    std::size_t an_samples = 1000000;
    std::uint64_t an_seed = 1;
    auto* an = app.add_subcommand("analyze", "Distribution reports with Monte Carlo checks");
    an->add_option("--c1", an_c1, "upper support of the grid edge");
    an->add_option("--extent-x", an_extent_x, "surface extent along x, cm");
    an->add_option("--extent-y", an_extent_y, "surface extent along y, cm");
    an->add_option("--cell", an_cell, "cell edge for the link-length CDF, cm");
    an->add_option("--samples", an_samples, "Monte Carlo sample count");
    an->add_option("--seed", an_seed, "Monte Carlo seed");
    an->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const gcibn::Scenario sc = gcibn::load_scenario(scenario_path);
            const gcibn::RunOutput out = gcibn::run_scenario(sc);
            fs::create_directories(out_dir);
            write_file(fs::path(out_dir) / "result.json", gcibn::result_json(out).dump(2) + "\n");
            write_file(fs::path(out_dir) / "energy.json", gcibn::energy_json(out).dump(2) + "\n");
            write_file(fs::path(out_dir) / "trace.txt", gcibn::trace_text(out.nico));
            if (!voronoi_path.empty())
                write_file(voronoi_path, voronoi_dump(out, sc.stack, voronoi_step));
            if (trace_stdout) std::cout << gcibn::trace_text(out.nico);
            std::cout << "clusters=" << out.nico.state.cluster_count()
                      << " iterations=" << out.nico.diagnostics.iterations
                      << " converged=" << (out.nico.diagnostics.converged ? "yes" : "no")
                      << " occupied_cells=" << out.grid.occupied << "\n";
            if (!out.nico.diagnostics.converged) {
                std::cerr << "warning: iteration cap reached before convergence\n";
                return 2;
            }
        } else if (*sweep) {
            gcibn::Scenario sc = gcibn::load_scenario(scenario_path);
            // CLI flags win over the scenario's sweep block.
            if (sweep_param_s.empty() && sc.sweep) sweep_param_s = sc.sweep->param;
            if (sweep_values.empty() && sc.sweep) sweep_values = sc.sweep->values;
            if (sweep_seeds <= 0) sweep_seeds = sc.sweep ? sc.sweep->seeds : 1;
            if (sweep_param_s.empty() || sweep_values.empty())
                throw std::invalid_argument("sweep: missing --param/--values");
            const auto param = gcibn::parse_sweep_param(sweep_param_s);
            const auto rows = gcibn::run_sweep(sc, param, sweep_values, sweep_seeds);
            const std::string table = gcibn::sweep_table(param, rows);
            fs::create_directories(out_dir);
            write_file(fs::path(out_dir) / "sweep.tsv", table);
            std::cout << table;
        } else if (*cal) {
            const auto rows = gcibn::parse_measurements(read_file(measurements_path));
            const double snp = cal_snr * cal_noise_psd * cal_bandwidth;
            const auto fit = gcibn::calibrate(rows, snp);
            gcibn::json j;
            auto dump_fit = [](const gcibn::PathFit& f) {
                return gcibn::json{{"g0", f.params.g0},
                                   {"n", f.params.n},
                                   {"ref_length", f.params.ref_length},
                                   {"rows", f.rows},
                                   {"residual", f.residual}};
            };
            j["channel"] = gcibn::json::object();
            if (fit.ss) j["channel"]["ss"] = dump_fit(*fit.ss);
            if (fit.ms) j["channel"]["ms"] = dump_fit(*fit.ms);
            std::cout << j.dump(2) << "\n";
        } else if (*an) {
            fs::create_directories(out_dir);
            const auto lam = gcibn::lambda_report(an_c1, an_samples, an_seed);
            const auto px = gcibn::cell_count_report(an_c1, an_extent_x, an_samples,
                                                     gcibn::rng::derive_seed(an_seed, 1));
            const auto link = gcibn::link_length_report(an_cell, an_samples,
                                                        gcibn::rng::derive_seed(an_seed, 2));
            write_file(fs::path(out_dir) / "grid_edge_cdf.tsv",
                       cdf_pairs_text(lam.closed_form, lam.empirical));
            write_file(fs::path(out_dir) / "cell_count_cdf.tsv",
                       cdf_pairs_text(px.closed_form, px.empirical));
            write_file(fs::path(out_dir) / "link_length_cdf.tsv",
                       cdf_pairs_text(link.closed_form, link.empirical));
            std::cout << "grid_edge ks=" << lam.ks << "\n"
                      << "cell_count ks=" << px.ks << "\n"
                      << "link_length ks=" << link.ks
                      << " expected_mean=" << gcibn::expected_link_length(an_cell) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
