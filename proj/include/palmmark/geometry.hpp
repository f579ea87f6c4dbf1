#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace palmmark {

/// Spatial dimension. Every formula that carries a `d` uses this constant.
inline constexpr int kDim = 2;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;

    constexpr double norm2() const { return x * x + y * y; }
    double norm() const { return std::hypot(x, y); }
};

/**
 * Axis-aligned rectangle [lower, upper). Points are contained when
 * lower <= p < upper coordinate-wise, so two contained points are always
 * strictly less than one side length apart in each coordinate and the
 * set covariance at their difference is positive.
 */
class ObservationWindow {
public:
    ObservationWindow(Vec2 lower, Vec2 upper) : lower_(lower), upper_(upper) {
        if (!(upper.x > lower.x) || !(upper.y > lower.y) || !std::isfinite(lower.x) ||
            !std::isfinite(lower.y) || !std::isfinite(upper.x) || !std::isfinite(upper.y)) {
            throw std::invalid_argument("window requires finite upper > lower in both coordinates");
        }
    }

    /// Origin-centered square with the given side length.
    static ObservationWindow centered_square(double side) {
        return ObservationWindow({-side / 2, -side / 2}, {side / 2, side / 2});
    }

    Vec2 lower() const { return lower_; }
    Vec2 upper() const { return upper_; }
    double side(int axis) const { return axis == 0 ? upper_.x - lower_.x : upper_.y - lower_.y; }
    double volume() const { return side(0) * side(1); }
    double inball_radius() const { return std::min(side(0), side(1)) / 2; }
    double perimeter() const { return 2 * (side(0) + side(1)); }
    double diameter() const { return std::hypot(side(0), side(1)); }

    bool contains(Vec2 p) const {
        return p.x >= lower_.x && p.x < upper_.x && p.y >= lower_.y && p.y < upper_.y;
    }

    /// Minkowski sum with the square [-r, r]^2.
    ObservationWindow dilated(double r) const {
        return ObservationWindow({lower_.x - r, lower_.y - r}, {upper_.x + r, upper_.y + r});
    }

    /// Euclidean distance from p to the closed rectangle (0 inside).
    double distance_to(Vec2 p) const {
        const double dx = std::max({lower_.x - p.x, 0.0, p.x - upper_.x});
        const double dy = std::max({lower_.y - p.y, 0.0, p.y - upper_.y});
        return std::hypot(dx, dy);
    }

    friend bool operator==(const ObservationWindow&, const ObservationWindow&) = default;

private:
    Vec2 lower_;
    Vec2 upper_;
};

struct PointPattern {
    std::vector<Vec2> locations;

    std::size_t size() const { return locations.size(); }
    bool empty() const { return locations.empty(); }
};

/// |W ∩ (W - lag)|, the area shared by the window and its translate.
inline double set_covariance(const ObservationWindow& w, Vec2 lag) {
    return std::max(0.0, w.side(0) - std::abs(lag.x)) * std::max(0.0, w.side(1) - std::abs(lag.y));
}

/// Origin-centered square whose expected point count at `intensity` is exactly `n`.
inline ObservationWindow window_for_expected_points(double intensity, double n) {
    if (!(intensity > 0) || !(n >= 1)) {
        throw std::invalid_argument("window_for_expected_points requires intensity > 0 and n >= 1");
    }
    return ObservationWindow::centered_square(std::sqrt(n / intensity));
}

/**
 * Checks the two averaging-window inequalities specialised to rectangles:
 *
 *   1 - γ(x)/|W| <= d |x| / ϱ(W)          for |x| <= ϱ(W)
 *   1/ϱ(W) <= perimeter/|W| <= d/ϱ(W)
 *
 * Throws std::domain_error when |lag| exceeds the inball radius.
 */
inline bool check_covariance_inequalities(const ObservationWindow& w, Vec2 lag) {
    const double rho = w.inball_radius();
    const double r = lag.norm();
    if (r > rho) {
        throw std::domain_error("lag outside inball radius");
    }
    const double vol = w.volume();
    const double lhs = 1.0 - set_covariance(w, lag) / vol;
    const bool covariance_ok = lhs <= kDim * r / rho;
    const double surface = w.perimeter() / vol;
    const bool surface_ok = 1.0 / rho <= surface && surface <= kDim / rho;
    return covariance_ok && surface_ok;
}

inline std::string to_string(const ObservationWindow& w) {
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    return fmt(w.lower().x) + "," + fmt(w.lower().y) + "," + fmt(w.upper().x) + "," + fmt(w.upper().y);
}

}  // namespace palmmark
