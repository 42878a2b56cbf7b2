#pragma once

// Channel calibration from (path, length, power) measurement rows:
// least-squares fit of the path-loss exponent and reference gain per
// path in log-log space.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcibn/channel.hpp"

namespace gcibn {

struct MeasurementRow {
    Path path = Path::SkinToSkin;
    double length_cm = 0.0;
    double pt_w = 0.0;
};

// Parses delimited text with header "path,length_cm,pt_mw". Path labels:
// S-S / M-S (case-insensitive, "ss"/"ms" accepted). Powers are given in
// mW and converted to W.
inline std::vector<MeasurementRow> parse_measurements(const std::string& text) {
    std::vector<MeasurementRow> rows;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {  // first non-comment line is the header
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string path_s, len_s, pt_s;
        if (!std::getline(ls, path_s, ',') || !std::getline(ls, len_s, ',') ||
            !std::getline(ls, pt_s, ','))
            throw std::invalid_argument("measurement row '" + line +
                                        "': expected path,length_cm,pt_mw");
        MeasurementRow r;
        std::string p = trim(path_s);
        std::transform(p.begin(), p.end(), p.begin(), ::tolower);
        if (p == "s-s" || p == "ss")
            r.path = Path::SkinToSkin;
        else if (p == "m-s" || p == "ms")
            r.path = Path::MuscleToSkin;
        else
            throw std::invalid_argument("measurement row '" + line + "': unknown path '" +
                                        path_s + "'");
        r.length_cm = std::stod(trim(len_s));
        r.pt_w = std::stod(trim(pt_s)) * 1e-3;
        if (!(r.length_cm > 0) || !(r.pt_w > 0))
            throw std::invalid_argument("measurement row '" + line + "': nonpositive value");
        rows.push_back(r);
    }
    return rows;
}

struct PathFit {
    PathParams params;
    double residual = 0.0;  // sum of squared log-power residuals
    std::size_t rows = 0;
};

struct CalibrationResult {
    std::optional<PathFit> ss;
    std::optional<PathFit> ms;
};

// Least squares of ln(pt) against ln(length). Power at fixed SNR is the
// noise numerator over gain, so the slope is the exponent and the
// intercept anchors the reference gain. Exact duplicate rows count once.
inline CalibrationResult calibrate(std::vector<MeasurementRow> rows, double snr_noise_power) {
    std::sort(rows.begin(), rows.end(), [](const MeasurementRow& a, const MeasurementRow& b) {
        if (a.path != b.path) return static_cast<int>(a.path) < static_cast<int>(b.path);
        if (a.length_cm != b.length_cm) return a.length_cm < b.length_cm;
        return a.pt_w < b.pt_w;
    });
    rows.erase(std::unique(rows.begin(), rows.end(),
                           [](const MeasurementRow& a, const MeasurementRow& b) {
                               return a.path == b.path && a.length_cm == b.length_cm &&
                                      a.pt_w == b.pt_w;
                           }),
               rows.end());

    CalibrationResult out;
    for (Path path : {Path::SkinToSkin, Path::MuscleToSkin}) {
        std::vector<std::pair<double, double>> pts;  // (ln len, ln pt)
        for (const auto& r : rows)
            if (r.path == path) pts.emplace_back(std::log(r.length_cm), std::log(r.pt_w));
        if (pts.empty()) continue;
        if (pts.size() < 2) throw std::invalid_argument("underdetermined");

        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = static_cast<double>(pts.size());
        const double denom = n * sxx - sx * sx;
        if (denom <= 1e-12 * n * sxx) throw std::invalid_argument("underdetermined");
        PathFit fit;
        fit.rows = pts.size();
        fit.params.n = (n * sxy - sx * sy) / denom;
        const double intercept = (sy - fit.params.n * sx) / n;
        fit.params.ref_length = 1.0;
        fit.params.g0 = snr_noise_power / std::exp(intercept);
        for (auto [x, y] : pts) {
            const double r = y - (intercept + fit.params.n * x);
            fit.residual += r * r;
        }
        (path == Path::SkinToSkin ? out.ss : out.ms) = fit;
    }
    return out;
}

}  // namespace gcibn
