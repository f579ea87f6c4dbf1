#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geometry.hpp"
#include "marks.hpp"
#include "matrix.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "spatial_grid.hpp"

namespace palmmark {

struct PalmEstimate {
    double lambda_hat = 0;
    std::vector<double> p_hat;
    std::size_t n_in_window = 0;
    std::size_t n_binned = 0;
};

struct DeviationVector {
    std::vector<double> y;
};

enum class EstimatorTag { analytic, s1, s2, s3, monte_carlo };

inline std::string_view to_string(EstimatorTag tag) {
    switch (tag) {
        case EstimatorTag::analytic: return "analytic";
        case EstimatorTag::s1: return "s1";
        case EstimatorTag::s2: return "s2";
        case EstimatorTag::s3: return "s3";
        case EstimatorTag::monte_carlo: return "monte-carlo";
    }
    return "unknown";
}

inline EstimatorTag parse_estimator_tag(std::string_view s) {
    for (auto t : {EstimatorTag::analytic, EstimatorTag::s1, EstimatorTag::s2, EstimatorTag::s3,
                   EstimatorTag::monte_carlo}) {
        if (to_string(t) == s) {
            return t;
        }
    }
    throw std::invalid_argument("unknown estimator tag: " + std::string(s));
}

struct BandwidthRecord {
    double c = 0;
    double b_k = 0;
    double a_k = 0;       // b_k·|W|^{1/d}: the pair distance scale
    double wb_bound = 0;  // ϱ(W) / (2 d r_w |W|^{1/d})
    bool wb_ok = false;
};

struct CovarianceEstimate {
    Matrix sigma;
    EstimatorTag tag = EstimatorTag::analytic;
    std::optional<BandwidthRecord> bandwidth;
};

enum class KernelShape { box, epanechnikov };

struct KernelSpec {
    KernelShape shape = KernelShape::box;
    double r_w = 1.0;
    double m_w = 1.0;

    double operator()(double x) const {
        const double a = std::abs(x);
        if (a > r_w) {
            return 0.0;
        }
        switch (shape) {
            case KernelShape::box: return 1.0;
            case KernelShape::epanechnikov: {
                const double t = a / r_w;
                return 1.0 - t * t;
            }
        }
        return 0.0;
    }
};

namespace detail {

inline void require_inside(const MarkedPointPattern& pattern, const ObservationWindow& window) {
    if (pattern.marks.size() != pattern.locations.size()) {
        throw std::invalid_argument("pattern has mismatched location and mark counts");
    }
    for (const Vec2& x : pattern.locations) {
        if (!window.contains(x)) {
            throw std::invalid_argument("pattern point outside the observation window");
        }
    }
}

inline void require_law(const AngularBinSet& bins, const HypotheticalMarkLaw& p0) {
    if (p0.ell() != bins.ell()) {
        throw std::invalid_argument("hypothesised law and bin set disagree on the number of bins");
    }
}

/// Sector of every mark (0..ℓ, ℓ being the unused sector) and per-sector counts.
struct SectorAssignment {
    std::vector<int> sector;
    std::vector<std::size_t> count;  // ℓ+1 entries
};

inline SectorAssignment assign_sectors(const MarkedPointPattern& pattern, const AngularBinSet& bins) {
    SectorAssignment s;
    s.sector.reserve(pattern.size());
    s.count.assign(bins.ell() + 1, 0);
    for (double m : pattern.marks) {
        const int k = bins.sector(m);
        s.sector.push_back(k);
        ++s.count[k];
    }
    return s;
}

/// (1/|W|) Σ_p (1_{C_i ∩ C_j}(M_p) - p_i p_j) for disjoint bins.
inline Matrix diagonal_term(const SectorAssignment& s, const HypotheticalMarkLaw& p0, double volume) {
    const std::size_t ell = p0.bin_probs.size();
    const double n = double(s.sector.size());
    Matrix m(ell);
    for (std::size_t i = 0; i < ell; ++i) {
        for (std::size_t j = i; j < ell; ++j) {
            const double v = ((i == j ? double(s.count[i]) : 0.0) - n * p0.bin_probs[i] * p0.bin_probs[j]) / volume;
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

/**
 * Weighted pair sums over sector pairs. With A[a][b] = Σ_{p≠q} g(p,q)
 * 1{s_p = a, s_q = b} (ordered pairs, g symmetric), the centred sum
 * Σ_{p≠q} g (1_{C_i}(M_p) - p_i)(1_{C_j}(M_q) - p_j) equals
 * A[i][j] - p_j R[i] - p_i R[j] + p_i p_j G with R the row sums of A and G
 * their total.
 */
class SectorPairSums {
public:
    explicit SectorPairSums(std::size_t sectors) : k_(sectors), a_(sectors * sectors, 0.0L) {}

    void add_unordered(int sp, int sq, double g) {
        a_[std::size_t(sp) * k_ + std::size_t(sq)] += g;
        a_[std::size_t(sq) * k_ + std::size_t(sp)] += g;
    }

    // Extended-precision cells: the centred combination below cancels heavily.
    Matrix centred(const HypotheticalMarkLaw& p0) const {
        std::vector<long double> row(k_, 0.0L);
        long double total = 0;
        for (std::size_t a = 0; a < k_; ++a) {
            for (std::size_t b = 0; b < k_; ++b) {
                row[a] += a_[a * k_ + b];
            }
            total += row[a];
        }
        const std::size_t ell = p0.bin_probs.size();
        const auto& p = p0.bin_probs;
        Matrix m(ell);
        for (std::size_t i = 0; i < ell; ++i) {
            for (std::size_t j = i; j < ell; ++j) {
                const double v = double(a_[i * k_ + j] - p[j] * row[i] - p[i] * row[j] + p[i] * p[j] * total);
                m(i, j) = v;
                m(j, i) = v;
            }
        }
        return m;
    }

private:
    std::size_t k_;
    std::vector<long double> a_;
};

/**
 * Edge-corrected pair sum Σ_{p≠q} u(p)u(q)ᵀ w(|X_q - X_p| / scale) / γ(X_q - X_p)
 * over pairs no farther apart than `support`. Unordered pairs are visited
 * with p ascending and, for each p, q > p ascending, whichever neighbour
 * search is used, so the result does not depend on the search path.
 */
template <class Weight>
Matrix edge_corrected_pairs(const MarkedPointPattern& pattern, const ObservationWindow& window,
                            const SectorAssignment& s, const HypotheticalMarkLaw& p0, double support,
                            Weight&& weight, bool use_grid) {
    const auto& x = pattern.locations;
    const std::size_t n = x.size();
    SectorPairSums sums(p0.bin_probs.size() + 1);
    const double support2 = support * support;
    auto visit = [&](std::size_t p, std::size_t q) {
        const Vec2 lag = x[q] - x[p];
        const double d2 = lag.norm2();
        if (d2 > support2) {
            return;
        }
        const double w = weight(std::sqrt(d2));
        if (w == 0.0) {
            return;
        }
        sums.add_unordered(s.sector[p], s.sector[q], w / set_covariance(window, lag));
    };
    if (use_grid) {
        const SpatialGrid grid(x, support);
        std::vector<std::size_t> nb;
        for (std::size_t p = 0; p < n; ++p) {
            nb.clear();
            grid.for_each_candidate(x[p], [&](std::size_t q) {
                if (q > p) {
                    nb.push_back(q);
                }
            });
            std::sort(nb.begin(), nb.end());
            for (std::size_t q : nb) {
                visit(p, q);
            }
        }
    } else {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                visit(p, q);
            }
        }
    }
    return sums.centred(p0);
}

}  // namespace detail

/// Empirical intensity and empirical bin frequencies; nullopt for an empty pattern.
inline std::optional<PalmEstimate> palm_estimate(const MarkedPointPattern& pattern, const ObservationWindow& window,
                                                 const AngularBinSet& bins) {
    detail::require_inside(pattern, window);
    if (pattern.empty()) {
        return std::nullopt;
    }
    const auto s = detail::assign_sectors(pattern, bins);
    PalmEstimate est;
    est.n_in_window = pattern.size();
    est.lambda_hat = double(pattern.size()) / window.volume();
    for (int i = 0; i < bins.ell(); ++i) {
        est.p_hat.push_back(double(s.count[i]) / double(pattern.size()));
        est.n_binned += s.count[i];
    }
    return est;
}

/// y_i = |W|^{-1/2} Σ_n (1_{C_i}(M_n) - p0_i) = √|W| λ̂ (p̂_i - p0_i).
inline DeviationVector deviation_vector(const MarkedPointPattern& pattern, const ObservationWindow& window,
                                        const AngularBinSet& bins, const HypotheticalMarkLaw& p0) {
    detail::require_inside(pattern, window);
    detail::require_law(bins, p0);
    std::vector<double> sum(bins.ell(), 0.0);
    for (double m : pattern.marks) {
        const int k = bins.sector(m);
        for (int i = 0; i < bins.ell(); ++i) {
            sum[i] += (k == i ? 1.0 : 0.0) - p0.bin_probs[i];
        }
    }
    const double scale = 1.0 / std::sqrt(window.volume());
    for (double& v : sum) {
        v *= scale;
    }
    return {std::move(sum)};
}

/// Limit covariance under independent marking with disjoint bins: λ (p_i δ_ij - p_i p_j).
inline CovarianceEstimate sigma_analytic_independent(double lambda, const HypotheticalMarkLaw& p0) {
    const auto& p = p0.bin_probs;
    Matrix m(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i; j < p.size(); ++j) {
            const double v = lambda * ((i == j ? p[i] : 0.0) - p[i] * p[j]);
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return {std::move(m), EstimatorTag::analytic, std::nullopt};
}

/// Edge-corrected unbiased estimator: every ordered pair weighted by 1/γ(X_q - X_p).
inline CovarianceEstimate sigma1(const MarkedPointPattern& pattern, const ObservationWindow& window,
                                 const AngularBinSet& bins, const HypotheticalMarkLaw& p0) {
    detail::require_inside(pattern, window);
    detail::require_law(bins, p0);
    const auto s = detail::assign_sectors(pattern, bins);
    Matrix m = detail::diagonal_term(s, p0, window.volume());
    m += detail::edge_corrected_pairs(pattern, window, s, p0, window.diameter(), [](double) { return 1.0; }, false);
    return {std::move(m), EstimatorTag::s1, std::nullopt};
}

/**
 * Naive estimator without edge correction, evaluated in O(n) through
 * Σ_{p≠q} u_i(p) u_j(q) = S_i S_j - Σ_p u_i(p) u_j(p), u_i(p) = 1_{C_i}(M_p) - p0_i.
 */
inline CovarianceEstimate sigma2(const MarkedPointPattern& pattern, const ObservationWindow& window,
                                 const AngularBinSet& bins, const HypotheticalMarkLaw& p0) {
    detail::require_inside(pattern, window);
    detail::require_law(bins, p0);
    const auto s = detail::assign_sectors(pattern, bins);
    const std::size_t ell = std::size_t(bins.ell());
    const auto& p = p0.bin_probs;
    const double n = double(pattern.size());
    const double vol = window.volume();

    std::vector<double> total(ell);
    for (std::size_t i = 0; i < ell; ++i) {
        total[i] = double(s.count[i]) - n * p[i];
    }
    Matrix m = detail::diagonal_term(s, p0, vol);
    for (std::size_t i = 0; i < ell; ++i) {
        for (std::size_t j = i; j < ell; ++j) {
            const double ni = double(s.count[i]);
            const double nj = double(s.count[j]);
            const double self = (i == j ? ni : 0.0) - p[i] * nj - p[j] * ni + n * p[i] * p[j];
            const double v = m(i, j) + (total[i] * total[j] - self) / vol;
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return {std::move(m), EstimatorTag::s2, std::nullopt};
}

/// b_k = c |W|^{-3/(4d)} with the finite-window bandwidth check ϱ/(2 d r_w |W|^{1/d}) >= b_k.
inline BandwidthRecord bandwidth(double c, const ObservationWindow& window, const KernelSpec& kernel = {}) {
    if (!(c > 0)) {
        throw std::invalid_argument("bandwidth constant must be positive");
    }
    const double vol = window.volume();
    BandwidthRecord r;
    r.c = c;
    r.b_k = c * std::pow(vol, -3.0 / (4.0 * kDim));
    const double side_scale = std::pow(vol, 1.0 / kDim);
    r.a_k = r.b_k * side_scale;
    r.wb_bound = window.inball_radius() / (2.0 * kDim * kernel.r_w * side_scale);
    r.wb_ok = r.wb_bound >= r.b_k;
    return r;
}

namespace detail {

inline CovarianceEstimate sigma3_impl(const MarkedPointPattern& pattern, const ObservationWindow& window,
                                      const AngularBinSet& bins, const HypotheticalMarkLaw& p0,
                                      const KernelSpec& kernel, double c, bool use_grid) {
    require_inside(pattern, window);
    require_law(bins, p0);
    const BandwidthRecord bw = bandwidth(c, window, kernel);
    const auto s = assign_sectors(pattern, bins);
    Matrix m = diagonal_term(s, p0, window.volume());
    const double support = bw.a_k * kernel.r_w;
    m += edge_corrected_pairs(
        pattern, window, s, p0, support, [&](double dist) { return kernel(dist / bw.a_k); }, use_grid);
    return {std::move(m), EstimatorTag::s3, bw};
}

}  // namespace detail

/**
 * Kernel-smoothed edge-corrected estimator: the σ̂⁽¹⁾ pair terms weighted by
 * w(|X_q - X_p| / a_k). Only pairs within a_k·r_w contribute; they are found
 * with a uniform grid of that cell size.
 */
inline CovarianceEstimate sigma3(const MarkedPointPattern& pattern, const ObservationWindow& window,
                                 const AngularBinSet& bins, const HypotheticalMarkLaw& p0, const KernelSpec& kernel,
                                 double c) {
    return detail::sigma3_impl(pattern, window, bins, p0, kernel, c, true);
}

/// Same sum as sigma3, visiting all n(n-1)/2 pairs.
inline CovarianceEstimate sigma3_all_pairs(const MarkedPointPattern& pattern, const ObservationWindow& window,
                                           const AngularBinSet& bins, const HypotheticalMarkLaw& p0,
                                           const KernelSpec& kernel, double c) {
    return detail::sigma3_impl(pattern, window, bins, p0, kernel, c, false);
}

inline MarkedPointPattern realize(const MamConfig& config, Rng& rng) { return mam_realize(config, rng); }
inline MarkedPointPattern realize(const BooleanCoxConfig& config, Rng& rng) {
    return sample_cox_on_boundary(config, rng);
}

/**
 * Monte-Carlo estimate of a model's covariance: the mean of σ̂⁽²⁾ over
 * n_reps realizations. Replication r uses the substream
 * substream_seed(config.seed, key, r); the mean is reduced in replication
 * order, so the result does not depend on `threads`.
 */
template <class ModelConfig>
CovarianceEstimate monte_carlo_sigma(const ModelConfig& config, std::size_t n_reps, const AngularBinSet& bins,
                                     const HypotheticalMarkLaw& p0, unsigned threads = 1,
                                     std::string_view key = "mc-sigma") {
    if (n_reps < 1) {
        throw std::invalid_argument("monte_carlo_sigma needs at least one replication");
    }
    std::vector<Matrix> per_rep(n_reps);
    parallel_for(n_reps, threads, [&](std::size_t r) {
        Rng rng = make_rng(substream_seed(config.seed, key, r));
        const MarkedPointPattern x = realize(config, rng);
        per_rep[r] = sigma2(x, config.window, bins, p0).sigma;
    });
    Matrix mean(std::size_t(bins.ell()));
    for (const Matrix& m : per_rep) {
        mean += m;
    }
    mean *= 1.0 / double(n_reps);
    return {std::move(mean), EstimatorTag::monte_carlo, std::nullopt};
}

}  // namespace palmmark
