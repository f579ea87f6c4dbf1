// palmmark: simulate marked point patterns, estimate Palm mark covariances,
// run the TMD / MGM chi-square tests and the Monte-Carlo error study.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <palmmark/config.hpp>
#include <palmmark/palmmark.hpp>

namespace pm = palmmark;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    return in;
}

std::string hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// "uniform" or "pn2:<kappa12>" (κ11 = κ22 = 1).
pm::HypotheticalMarkLaw parse_p0(const std::string& spec, const pm::AngularBinSet& bins) {
    if (spec == "uniform") {
        return pm::uniform_bin_probs(bins);
    }
    if (spec.rfind("pn2:", 0) == 0) {
        const double k12 = std::stod(spec.substr(4));
        return pm::axial_pn2_bin_probs({1.0, 1.0, k12}, bins);
    }
    throw std::runtime_error("--p0 must be 'uniform' or 'pn2:<kappa12>'");
}

pm::AngularBinSet bins_for(int ell, const std::string& span, const pm::MarkedPointPattern& pattern) {
    if (span == "axial") {
        return pm::AngularBinSet::axial(ell);
    }
    if (span == "circular") {
        return pm::AngularBinSet::circular(ell);
    }
    return pattern.mark_span > pm::kPi + 1e-9 ? pm::AngularBinSet::circular(ell) : pm::AngularBinSet::axial(ell);
}

std::string pattern_seed(const pm::LoadedPattern& lp) {
    auto it = lp.meta.find("seed");
    return it == lp.meta.end() ? "0" : it->second;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Palm mark distribution estimation and chi-square tests for marked point processes"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a marked point pattern");
    std::string sim_model = "mam";
    std::string sim_config;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    sim->add_option("--model", sim_model, "mam or booleancox")->check(CLI::IsMember({"mam", "booleancox"}));
    sim->add_option("--config", sim_config, "TOML config with a [model] section")->check(CLI::ExistingFile);
    sim->add_option("--seed", sim_seed, "Random seed");
    sim->add_option("--out", sim_out, "Output pattern CSV")->required();

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate the asymptotic covariance matrix of a pattern");
    std::string est_pattern;
    std::string est_window;
    int est_ell = 8;
    std::string est_span = "auto";
    std::string est_estimator = "s3";
    double est_c = 50;
    std::string est_kernel = "box";
    std::string est_p0 = "uniform";
    std::string est_out;
    est->add_option("--pattern", est_pattern, "Pattern CSV")->required()->check(CLI::ExistingFile);
    est->add_option("--window", est_window, "x0,y0,x1,y1 (default: from the pattern header)");
    est->add_option("--ell", est_ell, "Number of test bins");
    est->add_option("--span", est_span, "axial, circular or auto")->check(CLI::IsMember({"axial", "circular", "auto"}));
    est->add_option("--estimator", est_estimator, "s1, s2 or s3")->check(CLI::IsMember({"s1", "s2", "s3"}));
    est->add_option("--c", est_c, "Bandwidth constant for s3");
    est->add_option("--kernel", est_kernel, "box or epanechnikov")->check(CLI::IsMember({"box", "epanechnikov"}));
    est->add_option("--p0", est_p0, "Hypothesised law: uniform or pn2:<kappa12>");
    est->add_option("--out", est_out, "Output matrix CSV")->required();

    // test
    auto* tst = app.add_subcommand("test", "Run the TMD or MGM chi-square test on a pattern");
    std::string tst_mode = "tmd";
    std::string tst_pattern;
    std::string tst_window;
    std::string tst_p0 = "uniform";
    double tst_alpha = 0.05;
    std::string tst_sigma0;
    int tst_ell = 8;
    std::string tst_span = "auto";
    double tst_c = 50;
    std::string tst_kernel = "box";
    std::string tst_out;
    tst->add_option("--mode", tst_mode, "tmd or mgm")->check(CLI::IsMember({"tmd", "mgm"}));
    tst->add_option("--pattern", tst_pattern, "Pattern CSV")->required()->check(CLI::ExistingFile);
    tst->add_option("--window", tst_window, "x0,y0,x1,y1 (default: from the pattern header)");
    tst->add_option("--p0", tst_p0, "Hypothesised law: uniform or pn2:<kappa12>");
    tst->add_option("--alpha", tst_alpha, "Significance level");
    tst->add_option("--sigma0", tst_sigma0, "Null covariance CSV (mgm)")->check(CLI::ExistingFile);
    tst->add_option("--ell", tst_ell, "Number of test bins");
    tst->add_option("--span", tst_span, "axial, circular or auto")->check(CLI::IsMember({"axial", "circular", "auto"}));
    tst->add_option("--c", tst_c, "Bandwidth constant (tmd)");
    tst->add_option("--kernel", tst_kernel, "box or epanechnikov")->check(CLI::IsMember({"box", "epanechnikov"}));
    tst->add_option("--out", tst_out, "Output report CSV (default: stdout)");

    // study
    auto* std_cmd = app.add_subcommand("study", "Monte-Carlo error study over a parameter grid");
    std::string study_config;
    std::string study_out;
    bool study_full = false;
    int study_threads = 0;
    bool study_quiet = false;
    std_cmd->add_option("--config", study_config, "Study TOML")->check(CLI::ExistingFile);
    std_cmd->add_option("--out", study_out, "Output error table CSV")->required();
    std_cmd->add_flag("--full", study_full, "Use 10^4 replications per scenario");
    std_cmd->add_option("--threads", study_threads, "Worker threads (default: config or all cores)");
    std_cmd->add_flag("--quiet", study_quiet, "No progress output");

    // plotdata
    auto* plot = app.add_subcommand("plotdata", "Turn an error table into plot-ready curves");
    std::string plot_table;
    std::string plot_axis = "points";
    std::string plot_out;
    plot->add_option("--table", plot_table, "Error table CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--axis", plot_axis, "points or rho")->check(CLI::IsMember({"points", "rho"}));
    plot->add_option("--out", plot_out, "Output curves CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            pm::LoadedConfig cfg = sim_config.empty() ? pm::load_config_text("") : pm::load_config_file(sim_config);
            pm::MarkedPointPattern pattern{pm::ObservationWindow({0, 0}, {1, 1}), {}, {}};
            if (sim_model == "mam") {
                pattern = pm::mam_realize(pm::mam_config_from(cfg.table, sim_seed));
            } else {
                pattern = pm::sample_cox_on_boundary(pm::boolean_cox_config_from(cfg.table, sim_seed));
            }
            auto out = open_out(sim_out);
            pm::write_pattern_csv(out, pattern,
                                  {{"model", sim_model}, {"seed", std::to_string(sim_seed)},
                                   {"config_digest", hex(cfg.digest)}});
            std::cerr << "simulated " << pattern.size() << " points\n";
        } else if (*est) {
            auto in = open_in(est_pattern);
            std::optional<pm::ObservationWindow> window;
            if (!est_window.empty()) {
                window = pm::parse_window(est_window);
            }
            auto lp = pm::read_pattern_csv(in, window);
            const auto pattern = pm::clip(lp.pattern, lp.pattern.window);
            const auto bins = bins_for(est_ell, est_span, pattern);
            const auto p0 = parse_p0(est_p0, bins);
            pm::KernelSpec kernel;
            kernel.shape = est_kernel == "box" ? pm::KernelShape::box : pm::KernelShape::epanechnikov;
            pm::CovarianceEstimate sigma;
            if (est_estimator == "s1") {
                sigma = pm::sigma1(pattern, pattern.window, bins, p0);
            } else if (est_estimator == "s2") {
                sigma = pm::sigma2(pattern, pattern.window, bins, p0);
            } else {
                sigma = pm::sigma3(pattern, pattern.window, bins, p0, kernel, est_c);
                if (!sigma.bandwidth->wb_ok) {
                    std::cerr << "warning: bandwidth b_k=" << sigma.bandwidth->b_k
                              << " exceeds the finite-window bound " << sigma.bandwidth->wb_bound << '\n';
                }
            }
            auto out = open_out(est_out);
            pm::write_matrix_csv(out, sigma, {{"seed", pattern_seed(lp)}, {"window", pm::to_string(pattern.window)}});
        } else if (*tst) {
            auto in = open_in(tst_pattern);
            std::optional<pm::ObservationWindow> window;
            if (!tst_window.empty()) {
                window = pm::parse_window(tst_window);
            }
            auto lp = pm::read_pattern_csv(in, window);
            const auto pattern = pm::clip(lp.pattern, lp.pattern.window);
            const auto bins = bins_for(tst_ell, tst_span, pattern);
            const auto p0 = parse_p0(tst_p0, bins);
            pm::TestReport report;
            if (tst_mode == "tmd") {
                pm::KernelSpec kernel;
                kernel.shape = tst_kernel == "box" ? pm::KernelShape::box : pm::KernelShape::epanechnikov;
                report = pm::tmd_test(pattern, pattern.window, bins, p0, tst_c, tst_alpha, kernel);
                if (!report.wb_ok) {
                    std::cerr << "warning: bandwidth exceeds the finite-window bound\n";
                }
            } else {
                if (tst_sigma0.empty()) {
                    throw std::runtime_error("mgm mode needs --sigma0");
                }
                auto sin = open_in(tst_sigma0);
                report = pm::mgm_test(pattern, pattern.window, bins, p0, pm::read_matrix_csv(sin), tst_alpha);
            }
            report.seed = std::stoull(pattern_seed(lp));
            if (tst_out.empty()) {
                std::cout << pm::kReportHeader << '\n' << pm::report_record(report) << '\n';
            } else {
                auto out = open_out(tst_out);
                out << pm::kReportHeader << '\n' << pm::report_record(report) << '\n';
            }
        } else if (*std_cmd) {
            pm::LoadedConfig cfg =
                study_config.empty() ? pm::load_config_text("") : pm::load_config_file(study_config);
            pm::StudyConfig config = pm::study_config_from(cfg.table, study_full);
            if (study_threads > 0) {
                config.threads = unsigned(study_threads);
            }
            std::function<void(const std::string&)> progress;
            if (!study_quiet) {
                progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
            }
            const auto table = pm::run_study(config, progress);
            auto out = open_out(study_out);
            pm::write_table_csv(out, table,
                                {{"seed", std::to_string(config.master_seed)},
                                 {"n_reps", std::to_string(config.n_reps)},
                                 {"mc_reps", std::to_string(config.mc_reps)},
                                 {"config_digest", hex(cfg.digest)}});
        } else if (*plot) {
            auto in = open_in(plot_table);
            const auto table = pm::read_table_csv(in);
            auto out = open_out(plot_out);
            pm::write_plot_curves(out, table, plot_axis == "points" ? pm::PlotAxis::points : pm::PlotAxis::rho);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
