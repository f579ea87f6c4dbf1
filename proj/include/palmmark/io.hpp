#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "gof.hpp"
#include "models.hpp"

namespace palmmark {

inline constexpr const char* kVersion = "0.1.0";

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// `#`-prefixed `key=value` lines written ahead of CSV data.
using Provenance = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline void write_provenance(std::ostream& os, const Provenance& prov) {
    os << "# palmmark " << kVersion << '\n';
    for (const auto& [k, v] : prov) {
        os << "# " << k << '=' << v << '\n';
    }
}

inline std::string strip_cr(std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
        line.pop_back();
    }
    return line;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(s);
    while (std::getline(is, field, sep)) {
        out.push_back(trim(field));
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

inline double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::runtime_error("not a number: '" + s + "'");
    }
    if (used != s.size()) {
        throw std::runtime_error("not a number: '" + s + "'");
    }
    return v;
}

// Reads `# key=value` comment metadata into `meta`; returns false for data lines.
inline bool read_comment(const std::string& line, std::map<std::string, std::string>& meta) {
    const auto t = trim(line);
    if (t.empty()) {
        return true;
    }
    if (t[0] != '#') {
        return false;
    }
    const auto body = trim(t.substr(1));
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
        meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
    }
    return true;
}

}  // namespace detail

inline ObservationWindow parse_window(const std::string& text) {
    const auto f = detail::split(text, ',');
    if (f.size() != 4) {
        throw std::runtime_error("window must be given as x0,y0,x1,y1");
    }
    return ObservationWindow({detail::parse_double(f[0]), detail::parse_double(f[1])},
                             {detail::parse_double(f[2]), detail::parse_double(f[3])});
}

// ---------------------------------------------------------------------------
// Patterns: header `x,y,theta`, angles in radians, 17 significant digits.

inline void write_pattern_csv(std::ostream& os, const MarkedPointPattern& pattern, Provenance prov = {}) {
    prov.emplace_back("window", to_string(pattern.window));
    prov.emplace_back("mark_span", format_double(pattern.mark_span));
    detail::write_provenance(os, prov);
    os << "x,y,theta\n";
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        os << format_double(pattern.locations[i].x) << ',' << format_double(pattern.locations[i].y) << ','
           << format_double(pattern.marks[i]) << '\n';
    }
}

struct LoadedPattern {
    MarkedPointPattern pattern;
    std::map<std::string, std::string> meta;
};

/**
 * Reads a pattern CSV. The window comes from a `# window=` comment unless
 * `window` is supplied; without either, the bounding box of the points
 * (slightly enlarged so all points are inside) is used.
 */
inline LoadedPattern read_pattern_csv(std::istream& is, std::optional<ObservationWindow> window = std::nullopt) {
    std::map<std::string, std::string> meta;
    std::vector<Vec2> locs;
    std::vector<double> marks;
    bool header_seen = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (detail::read_comment(line, meta)) {
            continue;
        }
        const auto f = detail::split(line, ',');
        if (!header_seen) {
            header_seen = true;
            if (f.size() == 3 && f[0] == "x" && f[1] == "y" && f[2] == "theta") {
                continue;
            }
            throw std::runtime_error("pattern CSV must start with header x,y,theta");
        }
        if (f.size() != 3) {
            throw std::runtime_error("pattern CSV line " + std::to_string(line_no) + ": expected 3 fields");
        }
        locs.push_back({detail::parse_double(f[0]), detail::parse_double(f[1])});
        marks.push_back(detail::parse_double(f[2]));
    }
    if (!window) {
        if (auto it = meta.find("window"); it != meta.end()) {
            window = parse_window(it->second);
        } else if (!locs.empty()) {
            Vec2 lo = locs[0];
            Vec2 hi = locs[0];
            for (const Vec2& p : locs) {
                lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
                hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
            }
            const double pad = 1e-9 * std::max({1.0, hi.x - lo.x, hi.y - lo.y});
            window = ObservationWindow(lo, {hi.x + pad, hi.y + pad});
        } else {
            throw std::runtime_error("empty pattern without a window");
        }
    }
    double span = kPi;
    if (auto it = meta.find("mark_span"); it != meta.end()) {
        span = detail::parse_double(it->second);
    }
    return {MarkedPointPattern{*window, std::move(locs), std::move(marks), span}, std::move(meta)};
}

/// Points of `pattern` inside `window`, with the pattern's window replaced.
inline MarkedPointPattern clip(const MarkedPointPattern& pattern, const ObservationWindow& window) {
    MarkedPointPattern out{window, {}, {}, pattern.mark_span};
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (window.contains(pattern.locations[i])) {
            out.locations.push_back(pattern.locations[i]);
            out.marks.push_back(pattern.marks[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Covariance matrices: row-major CSV with provenance comments.

inline void write_matrix_csv(std::ostream& os, const CovarianceEstimate& est, Provenance prov = {}) {
    Provenance head{{"estimator", std::string(to_string(est.tag))}};
    if (est.bandwidth) {
        head.emplace_back("c", format_double(est.bandwidth->c));
        head.emplace_back("b_k", format_double(est.bandwidth->b_k));
        head.emplace_back("a_k", format_double(est.bandwidth->a_k));
        head.emplace_back("wb_ok", est.bandwidth->wb_ok ? "true" : "false");
    }
    head.insert(head.end(), prov.begin(), prov.end());
    detail::write_provenance(os, head);
    const Matrix& m = est.sigma;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            os << (j ? "," : "") << format_double(m(i, j));
        }
        os << '\n';
    }
}

inline CovarianceEstimate read_matrix_csv(std::istream& is) {
    std::map<std::string, std::string> meta;
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        line = detail::strip_cr(line);
        if (detail::read_comment(line, meta)) {
            continue;
        }
        std::vector<double> row;
        for (const auto& f : detail::split(line, ',')) {
            row.push_back(detail::parse_double(f));
        }
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) {
            throw std::runtime_error("covariance CSV is not square");
        }
        for (std::size_t j = 0; j < rows.size(); ++j) {
            m(i, j) = rows[i][j];
        }
    }
    if (!m.is_symmetric()) {
        throw std::runtime_error("covariance CSV is not symmetric");
    }
    CovarianceEstimate est{std::move(m), EstimatorTag::monte_carlo, std::nullopt};
    if (auto it = meta.find("estimator"); it != meta.end()) {
        est.tag = parse_estimator_tag(it->second);
    }
    if (auto it = meta.find("a_k"); it != meta.end()) {
        BandwidthRecord bw;
        bw.a_k = detail::parse_double(it->second);
        if (auto c = meta.find("c"); c != meta.end()) {
            bw.c = detail::parse_double(c->second);
        }
        if (auto b = meta.find("b_k"); b != meta.end()) {
            bw.b_k = detail::parse_double(b->second);
        }
        if (auto w = meta.find("wb_ok"); w != meta.end()) {
            bw.wb_ok = w->second == "true";
        }
        est.bandwidth = bw;
    }
    return est;
}

// ---------------------------------------------------------------------------
// Test reports: `test,stat,dof,crit,pvalue,reject,cond,wb_ok,npoints,seed`.

inline constexpr const char* kReportHeader = "test,stat,dof,crit,pvalue,reject,cond,wb_ok,npoints,seed";

inline std::string report_record(const TestReport& r) {
    std::ostringstream os;
    os << r.test << ',' << format_double(r.statistic) << ',' << r.dof << ',' << format_double(r.critical_value) << ','
       << format_double(r.p_value) << ',' << (r.valid() ? (r.reject ? "1" : "0") : to_string(r.status)) << ','
       << format_double(r.condition) << ',' << (r.wb_ok ? 1 : 0) << ',' << r.npoints << ',' << r.seed;
    return os.str();
}

}  // namespace palmmark
