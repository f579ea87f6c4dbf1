#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chi2.hpp"
#include "estimators.hpp"
#include "matrix.hpp"

namespace palmmark {

class SingularCovariance : public std::runtime_error {
public:
    SingularCovariance() : std::runtime_error("singular covariance") {}
};

/// Lower Cholesky factor of a symmetric positive definite matrix.
class Cholesky {
public:
    explicit Cholesky(const Matrix& a) : l_(a.size()) {
        if (!a.is_symmetric()) {
            throw std::invalid_argument("Cholesky factorisation needs a symmetric matrix");
        }
        const std::size_t n = a.size();
        double max_diag = 0;
        for (std::size_t i = 0; i < n; ++i) {
            max_diag = std::max(max_diag, a(i, i));
        }
        const double floor = 1e-12 * max_diag;
        for (std::size_t j = 0; j < n; ++j) {
            double d = a(j, j);
            for (std::size_t k = 0; k < j; ++k) {
                d -= l_(j, k) * l_(j, k);
            }
            if (!(d > floor)) {
                throw SingularCovariance();
            }
            l_(j, j) = std::sqrt(d);
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) {
                    s -= l_(i, k) * l_(j, k);
                }
                l_(i, j) = s / l_(j, j);
            }
        }
    }

    const Matrix& factor() const { return l_; }

    /// z with L z = y.
    std::vector<double> forward(const std::vector<double>& y) const {
        const std::size_t n = l_.size();
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = y[i];
            for (std::size_t k = 0; k < i; ++k) {
                s -= l_(i, k) * z[k];
            }
            z[i] = s / l_(i, i);
        }
        return z;
    }

    /// x with L Lᵀ x = y.
    std::vector<double> solve(const std::vector<double>& y) const {
        std::vector<double> x = forward(y);
        const std::size_t n = l_.size();
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x[ii];
            for (std::size_t k = ii + 1; k < n; ++k) {
                s -= l_(k, ii) * x[k];
            }
            x[ii] = s / l_(ii, ii);
        }
        return x;
    }

    /// yᵀ A⁻¹ y = |L⁻¹ y|².
    double quadratic_form(const std::vector<double>& y) const {
        double s = 0;
        for (double v : forward(y)) {
            s += v * v;
        }
        return s;
    }

private:
    Matrix l_;
};

struct SpdInverse {
    Matrix inverse;
    double condition = 0;  // 1-norm condition number
};

/// Inverse of a symmetric positive definite matrix via Cholesky. Throws SingularCovariance.
inline SpdInverse invert_spd(const Matrix& sigma) {
    const Cholesky chol(sigma);
    const std::size_t n = sigma.size();
    Matrix inv(n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e.assign(n, 0.0);
        e[j] = 1.0;
        const auto col = chol.solve(e);
        for (std::size_t i = 0; i < n; ++i) {
            inv(i, j) = col[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = v;
            inv(j, i) = v;
        }
    }
    if (max_abs_diff(sigma * inv, Matrix::identity(n)) >= 1e-8) {
        throw SingularCovariance();
    }
    return {inv, sigma.norm1() * inv.norm1()};
}

enum class TestStatus { ok, singular, empty };

inline const char* to_string(TestStatus s) {
    switch (s) {
        case TestStatus::ok: return "ok";
        case TestStatus::singular: return "singular";
        case TestStatus::empty: return "empty";
    }
    return "unknown";
}

struct TestReport {
    std::string test;
    double statistic = 0;
    int dof = 0;
    double critical_value = 0;
    double p_value = 1;
    bool reject = false;  // meaningful only when status == ok
    TestStatus status = TestStatus::ok;
    double condition = 0;
    bool wb_ok = true;
    std::size_t npoints = 0;
    std::uint64_t seed = 0;

    bool valid() const { return status == TestStatus::ok; }
};

/**
 * Quadratic-form χ² decision: statistic yᵀ Σ⁻¹ y, rejected when it exceeds
 * the (1 - alpha) quantile of χ²_ℓ.
 */
inline TestReport chi2_decision(std::string name, const std::vector<double>& y, const Matrix& sigma, double alpha,
                                std::size_t npoints) {
    if (!(alpha > 0 && alpha < 1)) {
        throw std::invalid_argument("significance level must lie in (0, 1)");
    }
    TestReport r;
    r.test = std::move(name);
    r.dof = int(y.size());
    r.critical_value = chi2_quantile(r.dof, 1.0 - alpha);
    r.npoints = npoints;
    if (npoints == 0) {
        r.status = TestStatus::empty;
        return r;
    }
    try {
        const Cholesky chol(sigma);
        r.statistic = chol.quadratic_form(y);
        r.condition = invert_spd(sigma).condition;
    } catch (const SingularCovariance&) {
        r.status = TestStatus::singular;
        r.statistic = std::nan("");
        r.p_value = std::nan("");
        return r;
    }
    r.p_value = chi2_sf(r.statistic, r.dof);
    r.reject = r.statistic > r.critical_value;
    return r;
}

/// Test of the typical mark distribution with the data-driven smoothed covariance σ̂⁽³⁾.
inline TestReport tmd_test(const MarkedPointPattern& pattern, const ObservationWindow& window,
                           const AngularBinSet& bins, const HypotheticalMarkLaw& p0, double c, double alpha,
                           const KernelSpec& kernel = {}) {
    const auto y = deviation_vector(pattern, window, bins, p0);
    const auto sigma = sigma3(pattern, window, bins, p0, kernel, c);
    TestReport r = chi2_decision("tmd", y.y, sigma.sigma, alpha, pattern.size());
    r.wb_ok = sigma.bandwidth->wb_ok;
    return r;
}

/// Test of mark-oriented goodness of model fit against a null-model covariance sigma0.
inline TestReport mgm_test(const MarkedPointPattern& pattern, const ObservationWindow& window,
                           const AngularBinSet& bins, const HypotheticalMarkLaw& p0, const CovarianceEstimate& sigma0,
                           double alpha) {
    if (sigma0.sigma.size() != std::size_t(bins.ell())) {
        throw std::invalid_argument("null covariance has the wrong dimension");
    }
    const auto y = deviation_vector(pattern, window, bins, p0);
    return chi2_decision("mgm", y.y, sigma0.sigma, alpha, pattern.size());
}

}  // namespace palmmark
