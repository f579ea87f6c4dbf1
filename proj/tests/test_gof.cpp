#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>

#include <palmmark/chi2.hpp>
#include <palmmark/gof.hpp>
#include <palmmark/parallel.hpp>

using namespace palmmark;
using Catch::Approx;

namespace {

const AngularBinSet kBins = AngularBinSet::axial(8);
const HypotheticalMarkLaw kUniform = uniform_bin_probs(kBins);

// k points in each of the nine sectors, so every empirical frequency is exactly 1/9.
MarkedPointPattern balanced_pattern(const ObservationWindow& w, int k) {
    MarkedPointPattern x{w, {}, {}, kPi};
    for (int s = 0; s < 9; ++s) {
        for (int r = 0; r < k; ++r) {
            x.locations.push_back({w.lower().x + (s + 0.5) * w.side(0) / 9, w.lower().y + (r + 0.5) * w.side(1) / k});
            x.marks.push_back((s + 0.25 + 0.5 * r / k) * kPi / 9);
        }
    }
    return x;
}

Matrix random_spd(std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> z;
    Matrix a(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a(i, j) = z(rng);
        }
    }
    Matrix s(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = i == j ? 0.5 : 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                v += a(i, k) * a(j, k);
            }
            s(i, j) = v;
        }
    }
    return s;
}

double tmd_rate(double kappa12, unsigned threads) {
    MamConfig c;
    c.kappa.kappa12 = kappa12;
    c.window = window_for_expected_points(c.intensity, 3000);
    const std::size_t reps = 1000;
    std::atomic<int> rejected{0};
    std::atomic<int> valid{0};
    parallel_for(reps, threads, [&](std::size_t r) {
        Rng rng = make_rng(substream_seed(404, "tmd-unit", r));
        const auto x = mam_realize(c, rng);
        const auto rep = tmd_test(x, c.window, kBins, kUniform, 50, 0.05);
        if (rep.valid()) {
            ++valid;
            rejected += rep.reject ? 1 : 0;
        }
    });
    UNSCOPED_INFO("kappa12=" << kappa12 << " valid=" << valid << " rejected=" << rejected);
    return double(rejected) / double(valid);
}

}  // namespace

TEST_CASE("inverse of simple matrices") {
    const auto id = invert_spd(Matrix::identity(4));
    CHECK(id.inverse == Matrix::identity(4));
    CHECK(id.condition == 1);
    const auto d = invert_spd(Matrix::diagonal({2, 4}));
    CHECK(d.inverse(0, 0) == Approx(0.5));
    CHECK(d.inverse(1, 1) == Approx(0.25));
    CHECK(d.inverse(0, 1) == 0);
    CHECK(d.condition == Approx(2));
}

TEST_CASE("inverse of the independent-marking covariance") {
    const Matrix s = sigma_analytic_independent(1.0, kUniform).sigma;
    const auto inv = invert_spd(s);
    CHECK(max_abs_diff(s * inv.inverse, Matrix::identity(8)) < 1e-10);
    CHECK(inv.inverse.is_symmetric());
    // (diag(p) - p pᵀ)⁻¹ = diag(1/p) + 11ᵀ / (1 - Σp).
    CHECK(inv.inverse(0, 0) == Approx(9 + 9));
    CHECK(inv.inverse(0, 5) == Approx(9));
}

TEST_CASE("Cholesky solves and quadratic forms") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const Matrix s = random_spd(6, seed);
        const Cholesky chol(s);
        const std::vector<double> y{1, -2, 0.5, 3, 0, -1};
        const auto x = chol.solve(y);
        for (std::size_t i = 0; i < 6; ++i) {
            double v = 0;
            for (std::size_t j = 0; j < 6; ++j) {
                v += s(i, j) * x[j];
            }
            CHECK(v == Approx(y[i]).epsilon(1e-10).margin(1e-12));
        }
        CHECK(chol.quadratic_form(y) == Approx(bilinear(y, invert_spd(s).inverse, y)).epsilon(1e-10));
        CHECK(chol.quadratic_form(y) > 0);
    }
}

TEST_CASE("singular and asymmetric matrices are rejected") {
    Matrix singular(2);
    singular(0, 0) = 1;
    singular(0, 1) = 1;
    singular(1, 0) = 1;
    singular(1, 1) = 1;
    CHECK_THROWS_AS(Cholesky(singular), SingularCovariance);
    CHECK_THROWS_AS(invert_spd(singular), SingularCovariance);

    Matrix indefinite = Matrix::diagonal({1, -1});
    CHECK_THROWS_AS(Cholesky(indefinite), SingularCovariance);

    Matrix asym = Matrix::identity(2);
    asym(0, 1) = 0.1;
    CHECK_THROWS_AS(Cholesky(asym), std::invalid_argument);
}

TEST_CASE("chi-square decision") {
    const Matrix s = Matrix::identity(3);
    const auto r = chi2_decision("x", {1, 2, 2}, s, 0.05, 10);
    CHECK(r.statistic == Approx(9));
    CHECK(r.dof == 3);
    CHECK(r.critical_value == Approx(chi2_quantile(3, 0.95)));
    CHECK(r.reject);
    CHECK(r.p_value < 0.05);
    CHECK(r.valid());

    const auto keep = chi2_decision("x", {1, 0, 0}, s, 0.05, 10);
    CHECK_FALSE(keep.reject);
    CHECK(keep.p_value > 0.05);

    const auto empty = chi2_decision("x", {0, 0, 0}, s, 0.05, 0);
    CHECK(empty.status == TestStatus::empty);

    const auto singular = chi2_decision("x", {1, 1}, Matrix::diagonal({1, 0}), 0.05, 3);
    CHECK(singular.status == TestStatus::singular);
    CHECK(std::isnan(singular.statistic));
    CHECK_FALSE(singular.valid());

    CHECK_THROWS(chi2_decision("x", {1}, Matrix::identity(1), 0, 1));
    CHECK_THROWS(chi2_decision("x", {1}, Matrix::identity(1), 1, 1));
}

TEST_CASE("decision rule is consistent across the threshold") {
    Rng rng = make_rng(17);
    std::normal_distribution<double> z;
    const Matrix s = random_spd(8, 4);
    for (int k = 0; k < 500; ++k) {
        std::vector<double> y(8);
        for (double& v : y) {
            v = 1.5 * z(rng);
        }
        const auto r = chi2_decision("x", y, s, 0.1, 5);
        CHECK(r.statistic >= 0);
        CHECK(r.reject == (r.statistic > r.critical_value));
        CHECK(r.reject == (r.p_value < 0.1));
    }
}

TEST_CASE("statistic scales inversely with the covariance") {
    const Matrix s = random_spd(8, 9);
    const std::vector<double> y{0.3, -1, 0.2, 0.9, -0.4, 0, 1.1, -0.6};
    const double t = chi2_decision("x", y, s, 0.05, 1).statistic;
    CHECK(chi2_decision("x", y, 4.0 * s, 0.05, 1).statistic == Approx(t / 4).epsilon(1e-12));
    std::vector<double> y2 = y;
    for (double& v : y2) {
        v *= 3;
    }
    CHECK(chi2_decision("x", y2, s, 0.05, 1).statistic == Approx(9 * t).epsilon(1e-12));
}

TEST_CASE("balanced patterns give a zero statistic") {
    const ObservationWindow w({0, 0}, {90, 90});
    const auto x = balanced_pattern(w, 5);
    for (double v : deviation_vector(x, w, kBins, kUniform).y) {
        CHECK(std::abs(v) < 1e-15);
    }
    const auto mgm = mgm_test(x, w, kBins, kUniform, sigma_analytic_independent(45.0 / 8100, kUniform), 0.05);
    CHECK(mgm.statistic == Approx(0).margin(1e-20));
    CHECK_FALSE(mgm.reject);
    CHECK(mgm.npoints == 45);

    const auto tmd = tmd_test(x, w, kBins, kUniform, 50, 0.05);
    if (tmd.valid()) {
        CHECK(tmd.statistic == Approx(0).margin(1e-20));
        CHECK_FALSE(tmd.reject);
    }
    CHECK_FALSE(tmd.wb_ok);

    CHECK_THROWS(mgm_test(x, w, kBins, kUniform, sigma_analytic_independent(1, uniform_bin_probs(AngularBinSet(3))), 0.05));
}

TEST_CASE("empty patterns are reported as invalid") {
    const ObservationWindow w({0, 0}, {10, 10});
    const MarkedPointPattern x{w, {}, {}};
    CHECK(tmd_test(x, w, kBins, kUniform, 50, 0.05).status == TestStatus::empty);
    CHECK(mgm_test(x, w, kBins, kUniform, sigma_analytic_independent(1, kUniform), 0.05).status == TestStatus::empty);
}

TEST_CASE("TMD test rejects a tilted mark law") {
    CHECK(tmd_rate(0.4, default_thread_count()) >= 0.95);
}

TEST_CASE("TMD test holds its level under independent uniform marks") {
    const double rate = tmd_rate(0.0, default_thread_count());
    CHECK(rate >= 0.03);
    CHECK(rate <= 0.09);
}
