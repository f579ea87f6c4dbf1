#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace palmmark {

inline constexpr double kPi = std::numbers::pi;

/// Direction in the upper half circle, stored as an angle in [0, π).
class AxialMark {
public:
    explicit AxialMark(double theta) : theta_(theta) {
        if (!(theta >= 0.0 && theta < kPi)) {
            throw std::domain_error("axial mark angle must lie in [0, pi)");
        }
    }
    double theta() const { return theta_; }

private:
    double theta_;
};

/**
 * The ℓ test bins: sectors [(i-1)·span/(ℓ+1), i·span/(ℓ+1)) for i = 1..ℓ.
 * The (ℓ+1)-th sector is left out so that the bin indicators, centred by
 * their probabilities, are not linearly dependent.
 *
 * Bins are addressed 0-based in code (bin 0 is the first sector).
 */
class AngularBinSet {
public:
    AngularBinSet(int ell, double full_span = kPi) : ell_(ell), span_(full_span) {
        if (ell < 1) {
            throw std::invalid_argument("bin set needs at least one bin");
        }
        if (!(full_span > 0)) {
            throw std::invalid_argument("bin span must be positive");
        }
    }

    static AngularBinSet axial(int ell) { return {ell, kPi}; }
    static AngularBinSet circular(int ell) { return {ell, 2 * kPi}; }

    int ell() const { return ell_; }
    double full_span() const { return span_; }
    double width() const { return span_ / (ell_ + 1); }
    double left_edge(int bin) const { return bin * span_ / (ell_ + 1); }

    /// Sector index in 0..ℓ; ℓ is the unused sector. Angles are taken modulo the span.
    int sector(double theta) const {
        double t = std::fmod(theta, span_);
        if (t < 0) {
            t += span_;
        }
        int s = int(t * (ell_ + 1) / span_);
        // Rounding can put an angle just below an edge into the next sector.
        while (s > 0 && t < left_edge(s)) {
            --s;
        }
        while (s < ell_ && t >= left_edge(s + 1)) {
            ++s;
        }
        return s;
    }

    friend bool operator==(const AngularBinSet&, const AngularBinSet&) = default;

private:
    int ell_;
    double span_;
};

/// Bin probabilities p₀(C_i) of a hypothesised mark distribution.
struct HypotheticalMarkLaw {
    std::vector<double> bin_probs;
    std::string label;

    int ell() const { return int(bin_probs.size()); }
};

struct GaussCovariance2 {
    double kappa11 = 1.0;
    double kappa22 = 1.0;
    double kappa12 = 0.0;

    double determinant() const { return kappa11 * kappa22 - kappa12 * kappa12; }
    bool valid() const { return kappa11 > 0 && kappa22 > 0 && determinant() > 0; }

    void require_valid() const {
        if (!valid()) {
            throw std::invalid_argument("Gaussian covariance must be positive definite");
        }
    }
};

inline std::optional<int> bin_index(double theta, const AngularBinSet& bins) {
    const int s = bins.sector(theta);
    if (s >= bins.ell()) {
        return std::nullopt;
    }
    return s;
}

inline std::optional<int> bin_index(AxialMark mark, const AngularBinSet& bins) {
    return bin_index(mark.theta(), bins);
}

inline HypotheticalMarkLaw uniform_bin_probs(const AngularBinSet& bins) {
    return {std::vector<double>(bins.ell(), 1.0 / (bins.ell() + 1)),
            bins.full_span() > kPi ? "uniform-circle" : "uniform-halfcircle"};
}

/// Identifies antipodal directions: v and -v map to the same angle in [0, π).
/// Both horizontal directions map to 0.
inline AxialMark axial_fold(Vec2 v) {
    if (std::abs(v.norm() - 1.0) > 1e-9) {
        throw std::domain_error("axial_fold expects a unit vector");
    }
    if (v.y < 0 || (v.y == 0 && v.x < 0)) {
        v = -v;
    }
    double theta = std::atan2(v.y, v.x);
    if (v.y == 0 || theta >= kPi) {
        theta = 0.0;
    }
    return AxialMark(theta);
}

/// Density of the angle of Z/|Z| for Z ~ N(0, kappa), on [0, 2π).
inline double pn2_density(double theta, const GaussCovariance2& kappa) {
    const double det = kappa.determinant();
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // uᵀ κ⁻¹ u with κ⁻¹ = adj(κ)/det
    const double q = (kappa.kappa22 * c * c - 2 * kappa.kappa12 * c * s + kappa.kappa11 * s * s) / det;
    return 1.0 / (2 * kPi * std::sqrt(det) * q);
}

namespace detail {

template <class F>
double simpson(F&& f, double a, double b, int intervals) {
    if (intervals % 2) {
        ++intervals;
    }
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int k = 1; k < intervals; ++k) {
        sum += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

}  // namespace detail

/**
 * Bin probabilities of the axially folded zero-mean projected normal law.
 * The folded density on [0, π) is f(θ) + f(θ + π); each sector is integrated
 * by composite Simpson with about grid/(ℓ+1) subintervals.
 */
inline HypotheticalMarkLaw axial_pn2_bin_probs(const GaussCovariance2& kappa, const AngularBinSet& bins,
                                               int grid = 20000) {
    kappa.require_valid();
    if (grid < 1000) {
        throw std::invalid_argument("integration grid must be at least 1000");
    }
    const int per_sector = std::max(2, grid / (bins.ell() + 1));
    const bool fold = bins.full_span() <= kPi;
    auto density = [&](double t) {
        return fold ? pn2_density(t, kappa) + pn2_density(t + kPi, kappa) : pn2_density(t, kappa);
    };
    HypotheticalMarkLaw law;
    law.label = "pn2(k11=" + std::to_string(kappa.kappa11) + ",k22=" + std::to_string(kappa.kappa22) +
                ",k12=" + std::to_string(kappa.kappa12) + ")";
    for (int i = 0; i < bins.ell(); ++i) {
        law.bin_probs.push_back(detail::simpson(density, bins.left_edge(i), bins.left_edge(i + 1), per_sector));
    }
    return law;
}

/// Integral of the (folded) PN density over all ℓ+1 sectors; 1 up to quadrature error.
inline double axial_pn2_total_mass(const GaussCovariance2& kappa, const AngularBinSet& bins, int grid = 20000) {
    const auto law = axial_pn2_bin_probs(kappa, bins, grid);
    const int per_sector = std::max(2, grid / (bins.ell() + 1));
    const bool fold = bins.full_span() <= kPi;
    double total = 0;
    for (double p : law.bin_probs) {
        total += p;
    }
    total += detail::simpson(
        [&](double t) { return fold ? pn2_density(t, kappa) + pn2_density(t + kPi, kappa) : pn2_density(t, kappa); },
        bins.left_edge(bins.ell()), bins.full_span(), per_sector);
    return total;
}

}  // namespace palmmark
