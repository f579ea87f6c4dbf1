#pragma once

// TOML configuration. Sections: [model], [bins], [test], [study]; every
// key is optional and falls back to the simulation-study defaults.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <toml.hpp>

#include "estimators.hpp"
#include "marks.hpp"
#include "models.hpp"
#include "random.hpp"
#include "study.hpp"

namespace palmmark {

struct LoadedConfig {
    toml::table table;
    std::string text;
    std::uint64_t digest = 0;  // FNV-1a of the file contents
};

inline LoadedConfig load_config_text(const std::string& text) {
    LoadedConfig c;
    c.text = text;
    c.digest = fnv1a64(text);
    try {
        c.table = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw std::runtime_error(std::string("config: ") + std::string(e.description()));
    }
    return c;
}

inline LoadedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str());
}

namespace detail {

inline const toml::table* section(const toml::table& root, std::string_view name) {
    return root[name].as_table();
}

inline double get_number(const toml::table* t, std::string_view key, double fallback) {
    if (!t) {
        return fallback;
    }
    if (auto v = (*t)[key].value<double>()) {
        return *v;
    }
    if ((*t)[key]) {
        throw std::runtime_error("config key '" + std::string(key) + "' must be a number");
    }
    return fallback;
}

inline std::string get_string(const toml::table* t, std::string_view key, std::string fallback) {
    if (!t) {
        return fallback;
    }
    if (auto v = (*t)[key].value<std::string>()) {
        return *v;
    }
    if ((*t)[key]) {
        throw std::runtime_error("config key '" + std::string(key) + "' must be a string");
    }
    return fallback;
}

inline std::vector<double> get_numbers(const toml::table* t, std::string_view key, std::vector<double> fallback) {
    if (!t || !(*t)[key]) {
        return fallback;
    }
    const toml::array* arr = (*t)[key].as_array();
    if (!arr) {
        if (auto v = (*t)[key].value<double>()) {
            return {*v};
        }
        throw std::runtime_error("config key '" + std::string(key) + "' must be a number array");
    }
    std::vector<double> out;
    for (const auto& el : *arr) {
        auto v = el.value<double>();
        if (!v) {
            throw std::runtime_error("config key '" + std::string(key) + "' must be a number array");
        }
        out.push_back(*v);
    }
    return out;
}

// [model] window = [x0, y0, x1, y1] or expected_points = n (origin-centred square).
inline ObservationWindow model_window(const toml::table* model, double intensity, ObservationWindow fallback) {
    if (model && (*model)["window"]) {
        const auto w = get_numbers(model, "window", {});
        if (w.size() != 4) {
            throw std::runtime_error("config [model] window must have four numbers");
        }
        return ObservationWindow({w[0], w[1]}, {w[2], w[3]});
    }
    if (model && (*model)["expected_points"]) {
        return window_for_expected_points(intensity, get_number(model, "expected_points", 0));
    }
    return fallback;
}

}  // namespace detail

inline MamConfig mam_config_from(const toml::table& root, std::uint64_t seed) {
    const auto* m = detail::section(root, "model");
    MamConfig c;
    c.intensity = detail::get_number(m, "intensity", c.intensity);
    c.rho = detail::get_number(m, "rho", c.rho);
    c.kappa.kappa11 = detail::get_number(m, "kappa11", 1.0);
    c.kappa.kappa22 = detail::get_number(m, "kappa22", 1.0);
    c.kappa.kappa12 = detail::get_number(m, "kappa12", 0.0);
    c.window = detail::model_window(m, c.intensity, c.window);
    c.seed = seed;
    c.validate();
    return c;
}

inline BooleanCoxConfig boolean_cox_config_from(const toml::table& root, std::uint64_t seed) {
    const auto* m = detail::section(root, "model");
    BooleanCoxConfig c;
    c.germ_intensity = detail::get_number(m, "germ_intensity", c.germ_intensity);
    const std::string law = detail::get_string(m, "radius_law", "fixed");
    if (law == "fixed") {
        c.radius_law = RadiusLaw::fixed;
    } else if (law == "uniform") {
        c.radius_law = RadiusLaw::uniform;
    } else {
        throw std::runtime_error("config [model] radius_law must be fixed or uniform");
    }
    c.radius = detail::get_number(m, "radius", c.radius);
    c.radius_min = detail::get_number(m, "radius_min", c.radius_min);
    c.radius_max = detail::get_number(m, "radius_max", c.radius_max);
    c.boundary_intensity = detail::get_number(m, "boundary_intensity", c.boundary_intensity);
    if (m && (*m)["window"]) {
        c.window = detail::model_window(m, 1.0, c.window);
    }
    c.seed = seed;
    c.validate();
    return c;
}

/// [bins] ell, span = "axial" | "circular".
inline AngularBinSet bins_from(const toml::table& root, int default_ell = 8) {
    const auto* b = detail::section(root, "bins");
    const int ell = int(detail::get_number(b, "ell", default_ell));
    const std::string span = detail::get_string(b, "span", "axial");
    if (span == "axial") {
        return AngularBinSet::axial(ell);
    }
    if (span == "circular") {
        return AngularBinSet::circular(ell);
    }
    throw std::runtime_error("config [bins] span must be axial or circular");
}

inline KernelSpec kernel_from(const toml::table& root) {
    const auto* t = detail::section(root, "test");
    KernelSpec k;
    const std::string shape = detail::get_string(t, "kernel", "box");
    if (shape == "box") {
        k.shape = KernelShape::box;
    } else if (shape == "epanechnikov") {
        k.shape = KernelShape::epanechnikov;
    } else {
        throw std::runtime_error("config [test] kernel must be box or epanechnikov");
    }
    k.r_w = detail::get_number(t, "r_w", 1.0);
    return k;
}

inline StudyConfig study_config_from(const toml::table& root, bool full) {
    const auto* m = detail::section(root, "model");
    const auto* s = detail::section(root, "study");
    const auto* t = detail::section(root, "test");
    StudyConfig c;
    c.intensity = detail::get_number(m, "intensity", c.intensity);
    c.kappa11 = detail::get_number(m, "kappa11", c.kappa11);
    c.kappa22 = detail::get_number(m, "kappa22", c.kappa22);
    c.ell = bins_from(root).ell();
    c.kernel = kernel_from(root);
    c.expected_points = detail::get_numbers(s, "expected_points", c.expected_points);
    c.rho = detail::get_numbers(s, "rho", c.rho);
    c.kappa12 = detail::get_numbers(s, "kappa12", c.kappa12);
    c.alpha = detail::get_numbers(s, "alpha", detail::get_numbers(t, "alpha", c.alpha));
    c.c = detail::get_numbers(s, "c", detail::get_numbers(t, "c", c.c));
    c.n_reps = std::size_t(detail::get_number(s, "n_reps", double(c.n_reps)));
    c.mc_reps = std::size_t(detail::get_number(s, "mc_reps", double(c.mc_reps)));
    if (full) {
        c.n_reps = 10000;
        c.mc_reps = std::max<std::size_t>(c.mc_reps, 10000);
    }
    if (s) {
        if (auto seed = (*s)["seed"].value<std::int64_t>()) {
            c.master_seed = std::uint64_t(*seed);
        }
    }
    c.threads = unsigned(detail::get_number(s, "threads", double(c.threads)));
    const std::string tests = detail::get_string(s, "tests", "both");
    if (tests == "tmd") {
        c.tests = TestSelector::tmd;
    } else if (tests == "mgm") {
        c.tests = TestSelector::mgm;
    } else if (tests == "both") {
        c.tests = TestSelector::both;
    } else {
        throw std::runtime_error("config [study] tests must be tmd, mgm or both");
    }
    const std::string null_rho = detail::get_string(t, "null_rho", detail::get_string(s, "null_rho", "data"));
    if (null_rho == "data") {
        c.null_rho = NullRho::data;
    } else if (null_rho == "zero") {
        c.null_rho = NullRho::zero;
    } else {
        throw std::runtime_error("config null_rho must be data or zero");
    }
    c.validate();
    return c;
}

}  // namespace palmmark
