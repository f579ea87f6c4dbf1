#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "geometry.hpp"

namespace palmmark {

/**
 * Uniform bucket grid over a rectangle for fixed-radius neighbour queries.
 * Cells are at least `radius` wide, so all neighbours of a point within
 * `radius` lie in its own cell or one of the eight adjacent cells.
 * Buckets are stored in compressed form (counting sort by cell).
 */
class SpatialGrid {
public:
    SpatialGrid(std::span<const Vec2> points, double radius) : points_(points) {
        if (points.empty()) {
            return;
        }
        Vec2 lo = points[0];
        Vec2 hi = points[0];
        for (const Vec2& p : points) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
        origin_ = lo;
        // Cap the cell count near the point count so tiny radii do not blow up memory.
        const double max_cells_per_axis = std::max(1.0, std::ceil(2.0 * std::sqrt(double(points.size()))));
        const double span_x = hi.x - lo.x;
        const double span_y = hi.y - lo.y;
        cell_ = std::max({radius, span_x / max_cells_per_axis, span_y / max_cells_per_axis});
        if (!(cell_ > 0) || !std::isfinite(cell_)) {
            cell_ = 1.0;
        }
        nx_ = std::size_t(span_x / cell_) + 1;
        ny_ = std::size_t(span_y / cell_) + 1;

        start_.assign(nx_ * ny_ + 1, 0);
        std::vector<std::size_t> cell_of(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            cell_of[i] = cell_index(points[i]);
            ++start_[cell_of[i] + 1];
        }
        for (std::size_t c = 0; c < nx_ * ny_; ++c) {
            start_[c + 1] += start_[c];
        }
        members_.resize(points.size());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i) {
            members_[fill[cell_of[i]]++] = i;
        }
    }

    double cell_size() const { return cell_; }

    /// Calls fn(j) for every indexed point j in the 3x3 block of cells around p.
    /// Candidates may lie farther than the radius; callers filter by distance.
    template <class Fn>
    void for_each_candidate(Vec2 p, Fn&& fn) const {
        if (members_.empty()) {
            return;
        }
        const auto [cx, cy] = cell_coords(p);
        const std::size_t x0 = cx > 0 ? cx - 1 : 0;
        const std::size_t y0 = cy > 0 ? cy - 1 : 0;
        const std::size_t x1 = std::min(cx + 1, nx_ - 1);
        const std::size_t y1 = std::min(cy + 1, ny_ - 1);
        for (std::size_t gy = y0; gy <= y1; ++gy) {
            for (std::size_t gx = x0; gx <= x1; ++gx) {
                const std::size_t c = gy * nx_ + gx;
                for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
                    fn(members_[k]);
                }
            }
        }
    }

    /// Calls fn(j) for every indexed point j with |points[j] - p| <= radius.
    template <class Fn>
    void for_each_within(Vec2 p, double radius, Fn&& fn) const {
        const double r2 = radius * radius;
        for_each_candidate(p, [&](std::size_t j) {
            if ((points_[j] - p).norm2() <= r2) {
                fn(j);
            }
        });
    }

private:
    std::pair<std::size_t, std::size_t> cell_coords(Vec2 p) const {
        auto clamp_axis = [this](double v, std::size_t n) {
            const double c = std::floor(v / cell_);
            if (!(c > 0)) {
                return std::size_t{0};
            }
            return std::min(std::size_t(c), n - 1);
        };
        return {clamp_axis(p.x - origin_.x, nx_), clamp_axis(p.y - origin_.y, ny_)};
    }

    std::size_t cell_index(Vec2 p) const {
        const auto [cx, cy] = cell_coords(p);
        return cy * nx_ + cx;
    }

    std::span<const Vec2> points_;
    Vec2 origin_{};
    double cell_ = 1.0;
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> members_;
};

}  // namespace palmmark
