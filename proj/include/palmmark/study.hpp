#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "estimators.hpp"
#include "gof.hpp"
#include "io.hpp"
#include "marks.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace palmmark {

enum class TestSelector { tmd, mgm, both };

/// Which MAM generates the MGM null covariance: κ₁₂ = 0 with the data's ρ, or with ρ = 0.
enum class NullRho { data, zero };

struct StudyConfig {
    double intensity = 3125.0 / (3000.0 * 3000.0);
    std::vector<double> expected_points{300, 600, 900, 1200, 1500, 1800, 2100, 2400, 2700, 3000, 3125};
    std::vector<double> rho{0, 50, 100, 150, 200, 250, 300};
    std::vector<double> kappa12{0, 0.1, 0.2, 0.4, 0.8};
    double kappa11 = 1.0;
    double kappa22 = 1.0;
    std::vector<double> alpha{0.025, 0.05, 0.1};
    int ell = 8;
    std::vector<double> c{20, 30, 40, 50, 60};
    KernelSpec kernel{};
    std::size_t n_reps = 1000;
    std::size_t mc_reps = 1000;
    std::uint64_t master_seed = 20240101;
    TestSelector tests = TestSelector::both;
    NullRho null_rho = NullRho::data;
    unsigned threads = default_thread_count();

    bool runs_tmd() const { return tests != TestSelector::mgm; }
    bool runs_mgm() const { return tests != TestSelector::tmd; }

    void validate() const {
        if (expected_points.empty() || rho.empty() || kappa12.empty() || alpha.empty() ||
            (runs_tmd() && c.empty())) {
            throw std::invalid_argument("study grids must be non-empty");
        }
        if (n_reps < 1 || (runs_mgm() && mc_reps < 1)) {
            throw std::invalid_argument("study needs at least one replication");
        }
        if (!(intensity > 0) || ell < 1) {
            throw std::invalid_argument("study needs positive intensity and at least one bin");
        }
    }
};

struct ErrorRow {
    std::string test;
    double rho = 0;
    double kappa12 = 0;
    double expected_points = 0;
    double alpha = 0;
    double c = std::nan("");  // TMD only
    double rate = 0;
    std::size_t invalid = 0;
    std::size_t n_valid = 0;
    double se = 0;
    double wall_seconds = 0;
};

struct ErrorTable {
    std::vector<ErrorRow> rows;

    const ErrorRow* find(std::string_view test, double rho, double kappa12, double points, double alpha,
                         double c = std::nan("")) const {
        for (const auto& r : rows) {
            const bool c_match = std::isnan(c) ? std::isnan(r.c) : r.c == c;
            if (r.test == test && r.rho == rho && r.kappa12 == kappa12 && r.expected_points == points &&
                r.alpha == alpha && c_match) {
                return &r;
            }
        }
        return nullptr;
    }
};

namespace detail {

inline std::string scenario_key(std::string_view purpose, double rho, double kappa12, double points) {
    std::ostringstream os;
    os << purpose << ":rho=" << format_double(rho) << ":k12=" << format_double(kappa12)
       << ":n=" << format_double(points);
    return os.str();
}

inline ErrorRow make_row(std::string test, double rho, double k12, double points, double alpha, double c,
                         const std::vector<double>& stats, std::size_t ell, double seconds) {
    const double crit = chi2_quantile(int(ell), 1.0 - alpha);
    ErrorRow row{std::move(test), rho, k12, points, alpha, c};
    std::size_t rejected = 0;
    for (double s : stats) {
        if (std::isnan(s)) {
            ++row.invalid;
        } else {
            ++row.n_valid;
            rejected += s > crit;
        }
    }
    row.rate = row.n_valid ? double(rejected) / double(row.n_valid) : std::nan("");
    row.se = row.n_valid ? std::sqrt(row.rate * (1 - row.rate) / double(row.n_valid)) : std::nan("");
    row.wall_seconds = seconds;
    return row;
}

}  // namespace detail

/// Null covariance for the MGM test at one (ρ, expected points) cell.
inline CovarianceEstimate study_null_sigma(const StudyConfig& config, double rho, double points) {
    const ObservationWindow window = window_for_expected_points(config.intensity, points);
    const AngularBinSet bins = AngularBinSet::axial(config.ell);
    const HypotheticalMarkLaw p0 = uniform_bin_probs(bins);
    const double null_rho = config.null_rho == NullRho::data ? rho : 0.0;
    MamConfig null_model{config.intensity, null_rho, {config.kappa11, config.kappa22, 0.0}, window,
                         substream_seed(config.master_seed, detail::scenario_key("sigma0", null_rho, 0.0, points), 0)};
    return monte_carlo_sigma(null_model, config.mc_reps, bins, p0, config.threads);
}

/**
 * Monte-Carlo error table. For every (expected points, ρ, κ₁₂) cell the
 * MAM is realised n_reps times; each realization is tested against
 * H₀: uniform marks by the MGM test (Σ₀ estimated once per cell from the
 * κ₁₂ = 0 null model) and by the TMD test for every c. Statistics are
 * thresholded for every α. Rows with κ₁₂ = 0 are type I errors, the rest
 * are rejection rates (power). Realizations depend only on the master seed
 * and the cell, so TMD rows for different c and MGM rows share data.
 */
inline ErrorTable run_study(const StudyConfig& config,
                            const std::function<void(const std::string&)>& progress = {}) {
    config.validate();
    const AngularBinSet bins = AngularBinSet::axial(config.ell);
    const HypotheticalMarkLaw p0 = uniform_bin_probs(bins);
    const std::size_t n_c = config.runs_tmd() ? config.c.size() : 0;
    std::map<std::pair<double, double>, CovarianceEstimate> null_sigma_cache;
    ErrorTable table;

    for (double points : config.expected_points) {
        const ObservationWindow window = window_for_expected_points(config.intensity, points);
        for (double rho : config.rho) {
            std::optional<Cholesky> null_chol;
            bool null_singular = false;
            if (config.runs_mgm()) {
                const double null_rho = config.null_rho == NullRho::data ? rho : 0.0;
                auto key = std::make_pair(null_rho, points);
                auto it = null_sigma_cache.find(key);
                if (it == null_sigma_cache.end()) {
                    it = null_sigma_cache.emplace(key, study_null_sigma(config, rho, points)).first;
                }
                try {
                    null_chol.emplace(it->second.sigma);
                } catch (const SingularCovariance&) {
                    null_singular = true;
                }
            }
            for (double k12 : config.kappa12) {
                const auto start = std::chrono::steady_clock::now();
                const std::string key = detail::scenario_key("data", rho, k12, points);
                std::vector<double> mgm_stats(config.n_reps, std::nan(""));
                std::vector<std::vector<double>> tmd_stats(n_c, std::vector<double>(config.n_reps, std::nan("")));

                parallel_for(config.n_reps, config.threads, [&](std::size_t r) {
                    MamConfig model{config.intensity, rho, {config.kappa11, config.kappa22, k12}, window,
                                    substream_seed(config.master_seed, key, r)};
                    const MarkedPointPattern x = mam_realize(model);
                    if (x.empty()) {
                        return;
                    }
                    const auto y = deviation_vector(x, window, bins, p0);
                    if (null_chol) {
                        mgm_stats[r] = null_chol->quadratic_form(y.y);
                    }
                    for (std::size_t ci = 0; ci < n_c; ++ci) {
                        const auto sigma = sigma3(x, window, bins, p0, config.kernel, config.c[ci]);
                        try {
                            tmd_stats[ci][r] = Cholesky(sigma.sigma).quadratic_form(y.y);
                        } catch (const SingularCovariance&) {
                        }
                    }
                });

                const double seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                for (double a : config.alpha) {
                    if (config.runs_mgm()) {
                        auto row = detail::make_row("mgm", rho, k12, points, a, std::nan(""), mgm_stats,
                                                    std::size_t(config.ell), seconds);
                        if (null_singular) {
                            row.invalid = config.n_reps;
                        }
                        table.rows.push_back(row);
                    }
                    for (std::size_t ci = 0; ci < n_c; ++ci) {
                        table.rows.push_back(detail::make_row("tmd", rho, k12, points, a, config.c[ci],
                                                              tmd_stats[ci], std::size_t(config.ell), seconds));
                    }
                }
                if (progress) {
                    progress(key + " done in " + format_double(seconds) + " s");
                }
            }
        }
    }
    return table;
}

/// Rejection rates at κ₁₂ = 0.4 across the expected-point grid, one curve per ρ.
inline ErrorTable power_curve(StudyConfig config, TestSelector test,
                              const std::function<void(const std::string&)>& progress = {}) {
    config.kappa12 = {0.4};
    config.tests = test;
    return run_study(config, progress);
}

// ---------------------------------------------------------------------------
// Table CSV

inline constexpr const char* kTableHeader =
    "test,rho,kappa12,expected_points,alpha,c,rate,invalid,n_valid,se,wall_seconds";

inline void write_table_csv(std::ostream& os, const ErrorTable& table, const Provenance& prov = {}) {
    detail::write_provenance(os, prov);
    os << kTableHeader << '\n';
    for (const auto& r : table.rows) {
        os << r.test << ',' << format_double(r.rho) << ',' << format_double(r.kappa12) << ','
           << format_double(r.expected_points) << ',' << format_double(r.alpha) << ','
           << (std::isnan(r.c) ? std::string("NA") : format_double(r.c)) << ',' << format_double(r.rate) << ','
           << r.invalid << ',' << r.n_valid << ',' << format_double(r.se) << ',' << format_double(r.wall_seconds)
           << '\n';
    }
}

inline ErrorTable read_table_csv(std::istream& is) {
    std::map<std::string, std::string> meta;
    ErrorTable table;
    std::string line;
    bool header_seen = false;
    auto num = [](const std::string& s) { return s == "NA" || s == "nan" ? std::nan("") : detail::parse_double(s); };
    while (std::getline(is, line)) {
        line = detail::strip_cr(line);
        if (detail::read_comment(line, meta)) {
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (line != kTableHeader) {
                throw std::runtime_error("unexpected error-table header");
            }
            continue;
        }
        const auto f = detail::split(line, ',');
        if (f.size() != 11) {
            throw std::runtime_error("error-table row needs 11 fields");
        }
        ErrorRow r;
        r.test = f[0];
        r.rho = num(f[1]);
        r.kappa12 = num(f[2]);
        r.expected_points = num(f[3]);
        r.alpha = num(f[4]);
        r.c = num(f[5]);
        r.rate = num(f[6]);
        r.invalid = std::size_t(std::stoull(f[7]));
        r.n_valid = std::size_t(std::stoull(f[8]));
        r.se = num(f[9]);
        r.wall_seconds = num(f[10]);
        table.rows.push_back(r);
    }
    return table;
}

enum class PlotAxis { points, rho };

/**
 * Plot-ready curves: for axis=points every series is a fixed
 * (test, ρ, κ₁₂, α, c) and x is the expected point count; for axis=rho the
 * series fix the expected point count instead and x is ρ.
 */
inline void write_plot_curves(std::ostream& os, const ErrorTable& table, PlotAxis axis) {
    using Key = std::tuple<std::string, double, double, double, double>;
    std::map<Key, std::vector<std::tuple<double, double, double>>> series;
    for (const auto& r : table.rows) {
        const double fixed = axis == PlotAxis::points ? r.rho : r.expected_points;
        const double x = axis == PlotAxis::points ? r.expected_points : r.rho;
        const double c = std::isnan(r.c) ? -1.0 : r.c;
        series[{r.test, fixed, r.kappa12, r.alpha, c}].emplace_back(x, r.rate, r.se);
    }
    os << "test," << (axis == PlotAxis::points ? "rho" : "expected_points") << ",kappa12,alpha,c,"
       << (axis == PlotAxis::points ? "expected_points" : "rho") << ",rate,se\n";
    for (auto& [key, pts] : series) {
        std::sort(pts.begin(), pts.end());
        const auto& [test, fixed, k12, alpha, c] = key;
        for (const auto& [x, rate, se] : pts) {
            os << test << ',' << format_double(fixed) << ',' << format_double(k12) << ',' << format_double(alpha)
               << ',' << (c < 0 ? std::string("NA") : format_double(c)) << ',' << format_double(x) << ','
               << format_double(rate) << ',' << format_double(se) << '\n';
        }
    }
}

}  // namespace palmmark
