#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "marks.hpp"
#include "random.hpp"
#include "spatial_grid.hpp"

namespace palmmark {

/// Locations with direction marks, clipped to `window`. Marks are angles in
/// [0, mark_span): π for axial marks, 2π for full-circle marks.
struct MarkedPointPattern {
    ObservationWindow window;
    std::vector<Vec2> locations;
    std::vector<double> marks;
    double mark_span = kPi;

    std::size_t size() const { return locations.size(); }
    bool empty() const { return locations.empty(); }
};

struct MamConfig {
    double intensity = 3125.0 / (3000.0 * 3000.0);
    double rho = 0.0;
    GaussCovariance2 kappa{};
    ObservationWindow window = ObservationWindow::centered_square(3000.0);
    std::uint64_t seed = 1;

    void validate() const {
        if (!(intensity > 0)) {
            throw std::invalid_argument("MAM intensity must be positive");
        }
        if (!(rho >= 0)) {
            throw std::invalid_argument("MAM averaging radius must be non-negative");
        }
        kappa.require_valid();
    }
};

enum class RadiusLaw { fixed, uniform };

struct BooleanCoxConfig {
    double germ_intensity = 3e-4;
    RadiusLaw radius_law = RadiusLaw::fixed;
    double radius = 20.0;      // fixed law
    double radius_min = 10.0;  // uniform law on [radius_min, radius_max]
    double radius_max = 30.0;
    double boundary_intensity = 0.1;
    ObservationWindow window = ObservationWindow::centered_square(1000.0);
    std::uint64_t seed = 1;

    double r_max() const { return radius_law == RadiusLaw::fixed ? radius : radius_max; }

    void validate() const {
        if (!(germ_intensity > 0) || !(boundary_intensity > 0)) {
            throw std::invalid_argument("Boolean-Cox intensities must be positive");
        }
        if (radius_law == RadiusLaw::fixed && !(radius > 0)) {
            throw std::invalid_argument("grain radius must be positive");
        }
        if (radius_law == RadiusLaw::uniform && !(radius_min > 0 && radius_max >= radius_min)) {
            throw std::invalid_argument("uniform radius law needs 0 < radius_min <= radius_max");
        }
    }
};

/// Homogeneous Poisson process on `window`.
inline PointPattern sample_poisson(const ObservationWindow& window, double intensity, Rng& rng) {
    if (!(intensity > 0)) {
        throw std::invalid_argument("Poisson intensity must be positive");
    }
    std::poisson_distribution<long long> count_dist(intensity * window.volume());
    const long long n = count_dist(rng);
    std::uniform_real_distribution<double> ux(window.lower().x, window.upper().x);
    std::uniform_real_distribution<double> uy(window.lower().y, window.upper().y);
    PointPattern out;
    out.locations.reserve(std::size_t(n));
    for (long long i = 0; i < n; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        out.locations.push_back({x, y});
    }
    return out;
}

/**
 * Moving average model. Poisson locations are simulated on the window
 * dilated by rho so that every retained point sees its full neighbourhood.
 * Each point carries a latent N(0, kappa) vector; its mark is the axially
 * folded direction of the sum of latent vectors over all points within
 * distance rho (itself included).
 */
inline MarkedPointPattern mam_realize(const MamConfig& config, Rng& rng) {
    config.validate();
    const ObservationWindow sim_window = config.window.dilated(config.rho);
    const PointPattern all = sample_poisson(sim_window, config.intensity, rng);

    const GaussCovariance2& k = config.kappa;
    const double l11 = std::sqrt(k.kappa11);
    const double l21 = k.kappa12 / l11;
    const double l22 = std::sqrt(k.kappa22 - l21 * l21);
    std::normal_distribution<double> normal;
    std::vector<Vec2> latent(all.size());
    for (Vec2& v : latent) {
        const double z1 = normal(rng);
        const double z2 = normal(rng);
        v = {l11 * z1, l21 * z1 + l22 * z2};
    }

    MarkedPointPattern out{config.window, {}, {}, kPi};
    const SpatialGrid grid(all.locations, config.rho);
    for (std::size_t n = 0; n < all.size(); ++n) {
        const Vec2 x = all.locations[n];
        if (!config.window.contains(x)) {
            continue;
        }
        Vec2 sum{};
        if (config.rho > 0) {
            grid.for_each_within(x, config.rho, [&](std::size_t i) { sum = sum + latent[i]; });
        } else {
            sum = latent[n];
        }
        double len = sum.norm();
        if (len < 1e-12) {
            sum = latent[n];
            len = sum.norm();
        }
        out.locations.push_back(x);
        out.marks.push_back(axial_fold((1.0 / len) * sum).theta());
    }
    return out;
}

inline MarkedPointPattern mam_realize(const MamConfig& config) {
    Rng rng = make_rng(config.seed);
    return mam_realize(config, rng);
}

/// Part of a disc's boundary circle exposed on the union boundary:
/// angles [begin, end) with 0 <= begin < end <= 2π.
struct ExposedArc {
    std::size_t disc = 0;
    double begin = 0;
    double end = 0;
};

namespace detail {

struct AngleInterval {
    double lo;
    double hi;
};

// Complement in [0, 2π) of a union of intervals already clipped to [0, 2π].
inline std::vector<AngleInterval> complement_on_circle(std::vector<AngleInterval> covered) {
    std::sort(covered.begin(), covered.end(), [](auto a, auto b) { return a.lo < b.lo; });
    std::vector<AngleInterval> free;
    double cursor = 0.0;
    for (const auto& c : covered) {
        if (c.lo > cursor) {
            free.push_back({cursor, c.lo});
        }
        cursor = std::max(cursor, c.hi);
    }
    if (cursor < 2 * kPi) {
        free.push_back({cursor, 2 * kPi});
    }
    return free;
}

}  // namespace detail

/**
 * Boundary of the union of discs B(germs[i], radii[i]) as exposed arcs, for
 * every disc that meets the window. A disc's circle loses the arc lying
 * inside each overlapping disc; the rest is the union boundary.
 */
inline std::vector<ExposedArc> boolean_boundary_arcs(const PointPattern& germs, const std::vector<double>& radii,
                                                     const ObservationWindow& window) {
    if (radii.size() != germs.size()) {
        throw std::invalid_argument("one radius per germ required");
    }
    double r_max = 0;
    for (double r : radii) {
        if (!(r > 0)) {
            throw std::invalid_argument("disc radii must be positive");
        }
        r_max = std::max(r_max, r);
    }
    std::vector<ExposedArc> arcs;
    if (germs.empty()) {
        return arcs;
    }
    const SpatialGrid grid(germs.locations, 2 * r_max);
    std::vector<detail::AngleInterval> covered;
    for (std::size_t i = 0; i < germs.size(); ++i) {
        const Vec2 ci = germs.locations[i];
        const double ri = radii[i];
        if (window.distance_to(ci) > ri) {
            continue;
        }
        covered.clear();
        bool fully_covered = false;
        grid.for_each_within(ci, ri + r_max, [&](std::size_t j) {
            if (j == i || fully_covered) {
                return;
            }
            const Vec2 delta = germs.locations[j] - ci;
            const double d = delta.norm();
            const double rj = radii[j];
            if (d >= ri + rj) {
                return;
            }
            if (d == 0 && ri == rj) {
                // Coincident discs: keep the boundary on the lower index only.
                fully_covered = j < i;
                return;
            }
            if (d + ri <= rj) {
                fully_covered = true;
                return;
            }
            if (d + rj <= ri) {
                return;
            }
            const double half = std::acos(std::clamp((d * d + ri * ri - rj * rj) / (2 * d * ri), -1.0, 1.0));
            double mid = std::atan2(delta.y, delta.x);
            if (mid < 0) {
                mid += 2 * kPi;
            }
            const double lo = mid - half;
            const double hi = mid + half;
            if (lo < 0) {
                covered.push_back({lo + 2 * kPi, 2 * kPi});
                covered.push_back({0.0, hi});
            } else if (hi > 2 * kPi) {
                covered.push_back({lo, 2 * kPi});
                covered.push_back({0.0, hi - 2 * kPi});
            } else {
                covered.push_back({lo, hi});
            }
        });
        if (fully_covered) {
            continue;
        }
        for (const auto& f : detail::complement_on_circle(covered)) {
            arcs.push_back({i, f.lo, f.hi});
        }
    }
    return arcs;
}

inline double exposed_length(const std::vector<ExposedArc>& arcs, const std::vector<double>& radii) {
    double total = 0;
    for (const auto& a : arcs) {
        total += radii[a.disc] * (a.end - a.begin);
    }
    return total;
}

/**
 * Cox process on the boundary of a Boolean model of discs with outer normal
 * directions as full-circle marks. Germs are Poisson on the window dilated
 * by 2·r_max; given the union boundary, points are Poisson with intensity
 * `boundary_intensity` per unit length and are kept when inside the window.
 */
inline MarkedPointPattern sample_cox_on_boundary(const BooleanCoxConfig& config, Rng& rng) {
    config.validate();
    const PointPattern germs = sample_poisson(config.window.dilated(2 * config.r_max()), config.germ_intensity, rng);
    std::vector<double> radii(germs.size(), config.radius);
    if (config.radius_law == RadiusLaw::uniform) {
        std::uniform_real_distribution<double> ur(config.radius_min, config.radius_max);
        for (double& r : radii) {
            r = ur(rng);
        }
    }
    const auto arcs = boolean_boundary_arcs(germs, radii, config.window);

    std::vector<double> cumulative;
    cumulative.reserve(arcs.size());
    double total = 0;
    for (const auto& a : arcs) {
        total += radii[a.disc] * (a.end - a.begin);
        cumulative.push_back(total);
    }

    MarkedPointPattern out{config.window, {}, {}, 2 * kPi};
    if (total <= 0) {
        return out;
    }
    std::poisson_distribution<long long> count_dist(config.boundary_intensity * total);
    const long long n = count_dist(rng);
    std::uniform_real_distribution<double> u(0.0, total);
    for (long long k = 0; k < n; ++k) {
        const double s = u(rng);
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
        const std::size_t idx = std::min(std::size_t(it - cumulative.begin()), arcs.size() - 1);
        const ExposedArc& a = arcs[idx];
        const double before = idx == 0 ? 0.0 : cumulative[idx - 1];
        const double r = radii[a.disc];
        const double phi = std::min(a.begin + (s - before) / r, a.end);
        const Vec2 c = germs.locations[a.disc];
        const Vec2 x{c.x + r * std::cos(phi), c.y + r * std::sin(phi)};
        if (!config.window.contains(x)) {
            continue;
        }
        double mark = std::fmod(phi, 2 * kPi);
        if (mark < 0) {
            mark += 2 * kPi;
        }
        out.locations.push_back(x);
        out.marks.push_back(mark);
    }
    return out;
}

inline MarkedPointPattern sample_cox_on_boundary(const BooleanCoxConfig& config) {
    Rng rng = make_rng(config.seed);
    return sample_cox_on_boundary(config, rng);
}

}  // namespace palmmark
