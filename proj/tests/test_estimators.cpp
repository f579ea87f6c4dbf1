#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <palmmark/estimators.hpp>

#include "oracles.hpp"

using namespace palmmark;
using Catch::Approx;

namespace {

const AngularBinSet kBins = AngularBinSet::axial(8);
const HypotheticalMarkLaw kUniform = uniform_bin_probs(kBins);

MarkedPointPattern random_pattern(const ObservationWindow& w, std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> ux(w.lower().x, w.upper().x);
    std::uniform_real_distribution<double> uy(w.lower().y, w.upper().y);
    std::uniform_real_distribution<double> um(0, kPi);
    MarkedPointPattern x{w, {}, {}, kPi};
    for (std::size_t k = 0; k < n; ++k) {
        x.locations.push_back({ux(rng), uy(rng)});
        x.marks.push_back(um(rng));
    }
    return x;
}

double mid(int bin) { return (bin + 0.5) * kPi / 9; }

}  // namespace

TEST_CASE("estimator tags") {
    for (auto t : {EstimatorTag::analytic, EstimatorTag::s1, EstimatorTag::s2, EstimatorTag::s3,
                   EstimatorTag::monte_carlo}) {
        CHECK(parse_estimator_tag(to_string(t)) == t);
    }
    CHECK_THROWS(parse_estimator_tag("s4"));
}

TEST_CASE("kernel shapes") {
    const KernelSpec box;
    CHECK(box(0) == 1);
    CHECK(box(1) == 1);
    CHECK(box(-1.0001) == 0);
    const KernelSpec ep{KernelShape::epanechnikov, 2.0};
    CHECK(ep(0) == 1);
    CHECK(ep(1) == Approx(0.75));
    CHECK(ep(-1) == ep(1));
    CHECK(ep(2.5) == 0);
}

TEST_CASE("Palm estimate on a small pattern") {
    const ObservationWindow w({0, 0}, {4, 2});
    MarkedPointPattern x{w, {{0.5, 0.5}, {1, 1}, {2, 1.5}, {3.5, 0.1}}, {mid(2), mid(2), mid(0), mid(8)}};
    const auto est = palm_estimate(x, w, kBins);
    REQUIRE(est);
    CHECK(est->lambda_hat == 0.5);
    CHECK(est->p_hat[2] == 0.5);
    CHECK(est->p_hat[0] == 0.25);
    CHECK(est->n_in_window == 4);
    CHECK(est->n_binned == 3);

    MarkedPointPattern unused{w, {{1, 1}, {2, 1}}, {mid(8), mid(8)}};
    const auto none = palm_estimate(unused, w, kBins);
    double total = 0;
    for (double p : none->p_hat) {
        total += p;
    }
    CHECK(total == 0);

    CHECK_FALSE(palm_estimate(MarkedPointPattern{w, {}, {}}, w, kBins));

    MarkedPointPattern outside{w, {{5, 1}}, {0.1}};
    CHECK_THROWS(palm_estimate(outside, w, kBins));
}

TEST_CASE("Palm estimate of the independent MAM is close to uniform") {
    MamConfig c;
    c.intensity = 0.1;
    c.window = ObservationWindow::centered_square(1000);
    c.seed = 21;
    const auto x = mam_realize(c);
    const auto est = palm_estimate(x, c.window, kBins);
    REQUIRE(est);
    const double n = double(est->n_in_window);
    CHECK(est->lambda_hat == Approx(0.1).epsilon(0.02));
    for (double p : est->p_hat) {
        CHECK(std::abs(p - 1.0 / 9) < 3 * std::sqrt((1.0 / 9) * (8.0 / 9) / n));
    }
}

TEST_CASE("deviation vector") {
    const ObservationWindow w({0, 0}, {10, 10});
    CHECK(deviation_vector(MarkedPointPattern{w, {}, {}}, w, kBins, kUniform).y == std::vector<double>(8, 0.0));

    MarkedPointPattern x{w, {{1, 1}, {2, 2}, {3, 3}}, {mid(0), mid(0), mid(0)}};
    const auto y = deviation_vector(x, w, kBins, kUniform).y;
    CHECK(y[0] == Approx(3 * (1 - 1.0 / 9) / 10));
    for (int j = 1; j < 8; ++j) {
        CHECK(y[j] == Approx(-3.0 / 9 / 10));
    }

    const auto z = random_pattern(w, 50, 4);
    const auto yz = deviation_vector(z, w, kBins, kUniform).y;
    double unused = 0;
    for (double m : z.marks) {
        unused += (kBins.sector(m) == 8 ? 1.0 : 0.0) - 1.0 / 9;
    }
    double sum = unused / 10;
    for (double v : yz) {
        sum += v;
    }
    CHECK(std::abs(sum) < 1e-12);

    CHECK_THROWS(deviation_vector(x, w, kBins, uniform_bin_probs(AngularBinSet::axial(3))));
}

TEST_CASE("analytic covariance under independent marking") {
    const auto s = sigma_analytic_independent(1.0, kUniform).sigma;
    CHECK(s(0, 0) == Approx(8.0 / 81));
    CHECK(s(0, 1) == Approx(-1.0 / 81));
    CHECK(s.is_symmetric());
    CHECK(sigma_analytic_independent(3.4722e-4, kUniform).sigma(3, 3) == Approx(3.4294e-5).epsilon(1e-4));
    const auto one = sigma_analytic_independent(2.0, uniform_bin_probs(AngularBinSet::axial(1))).sigma;
    CHECK(one(0, 0) == 0.5);
}

TEST_CASE("edge-corrected estimator on two points by hand") {
    const ObservationWindow w({0, 0}, {10, 10});
    MarkedPointPattern x{w, {{2, 3}, {5, 7}}, {mid(0), mid(1)}};
    const auto s = sigma1(x, w, kBins, kUniform);
    CHECK(s.tag == EstimatorTag::s1);
    const double p = 1.0 / 9;
    const double g = 7.0 * 6.0;
    auto u = [&](int bin, int i) { return (bin == i ? 1.0 : 0.0) - p; };
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            const double diag = ((i == j && (i == 0 || i == 1)) ? 1.0 : 0.0) + (i == j && i == 1 ? 0.0 : 0.0);
            const double first = (diag - 2 * p * p) / 100;
            const double pairs = (u(0, i) * u(1, j) + u(1, i) * u(0, j)) / g;
            CHECK(s.sigma(i, j) == Approx(first + pairs).epsilon(1e-13));
        }
    }
    CHECK(oracle::relative_error(s.sigma, oracle::sigma_edge(x, w, kUniform, kPi, 1e300)) < 1e-14);
}

TEST_CASE("estimators on an empty pattern") {
    const ObservationWindow w({0, 0}, {10, 10});
    const MarkedPointPattern x{w, {}, {}};
    CHECK(sigma1(x, w, kBins, kUniform).sigma.max_abs() == 0);
    CHECK(sigma2(x, w, kBins, kUniform).sigma.max_abs() == 0);
    CHECK(sigma3(x, w, kBins, kUniform, {}, 50).sigma.max_abs() == 0);
}

TEST_CASE("fast estimators agree with literal sums") {
    const ObservationWindow w({-50, 20}, {150, 120});
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto x = random_pattern(w, 200, seed);
        const auto s2 = sigma2(x, w, kBins, kUniform).sigma;
        CHECK(oracle::relative_error(s2, oracle::sigma2(x, w, kUniform, kPi)) < 1e-10);
        CHECK(s2.is_symmetric());

        const auto s3 = sigma3(x, w, kBins, kUniform, {}, 50);
        REQUIRE(s3.bandwidth);
        const double support = s3.bandwidth->a_k;
        CHECK(oracle::relative_error(s3.sigma, oracle::sigma_edge(x, w, kUniform, kPi, support)) < 1e-12);
        CHECK(s3.sigma == sigma3_all_pairs(x, w, kBins, kUniform, {}, 50).sigma);
    }
}

TEST_CASE("smoothed estimator limits") {
    const ObservationWindow w({0, 0}, {100, 100});
    const auto x = random_pattern(w, 120, 9);
    // a_k = c·|W|^{1/8}; c = 1e3 puts the support far beyond the diameter.
    CHECK(sigma3(x, w, kBins, kUniform, {}, 1e3).sigma == sigma1(x, w, kBins, kUniform).sigma);

    double min_dist = 1e300;
    for (std::size_t p = 0; p < x.size(); ++p) {
        for (std::size_t q = p + 1; q < x.size(); ++q) {
            min_dist = std::min(min_dist, (x.locations[p] - x.locations[q]).norm());
        }
    }
    const double c = 0.5 * min_dist / std::pow(w.volume(), 1.0 / 8);
    const auto tiny = sigma3(x, w, kBins, kUniform, {}, c).sigma;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            CHECK(tiny(i, j) == Approx(double(oracle::diagonal_entry(x, w, kUniform, kPi, i, j))).epsilon(1e-12));
        }
    }
}

TEST_CASE("smoothed estimator with a tapered kernel") {
    const ObservationWindow w({0, 0}, {100, 100});
    const auto x = random_pattern(w, 150, 13);
    const KernelSpec ep{KernelShape::epanechnikov, 1.0};
    const auto s = sigma3(x, w, kBins, kUniform, ep, 8);
    const double a = s.bandwidth->a_k;
    Matrix expect(8);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            long double pair = 0;
            for (std::size_t p = 0; p < x.size(); ++p) {
                for (std::size_t q = 0; q < x.size(); ++q) {
                    if (p == q) {
                        continue;
                    }
                    const Vec2 d = x.locations[q] - x.locations[p];
                    const double wt = ep(d.norm() / a);
                    if (wt == 0) {
                        continue;
                    }
                    const double up = (oracle::in_bin(x.marks[p], i, 8, kPi) ? 1.0 : 0.0) - 1.0 / 9;
                    const double uq = (oracle::in_bin(x.marks[q], j, 8, kPi) ? 1.0 : 0.0) - 1.0 / 9;
                    pair += (long double)up * uq * wt / oracle::overlap_area(w, d.x, d.y);
                }
            }
            expect(i, j) = double(oracle::diagonal_entry(x, w, kUniform, kPi, i, j) + pair);
        }
    }
    CHECK(oracle::relative_error(s.sigma, expect) < 1e-12);
}

TEST_CASE("bandwidth rule") {
    const auto big = bandwidth(50, ObservationWindow::centered_square(3000));
    CHECK(big.b_k == Approx(50 * std::pow(9e6, -0.375)).epsilon(1e-14));
    CHECK(big.a_k == Approx(big.b_k * 3000).epsilon(1e-14));
    CHECK(big.b_k == Approx(0.1233).epsilon(1e-3));
    CHECK(big.a_k == Approx(370.0).epsilon(1e-3));
    CHECK(big.wb_bound == Approx(0.125));
    CHECK(big.wb_ok);

    const auto small = bandwidth(50, ObservationWindow::centered_square(929.52));
    CHECK(small.b_k == Approx(0.297).epsilon(2e-3));
    CHECK_FALSE(small.wb_ok);

    for (double side : {1.0, 17.0, 5000.0}) {
        CHECK(bandwidth(1, ObservationWindow::centered_square(side)).wb_bound == Approx(0.125));
    }
    CHECK(bandwidth(1, ObservationWindow::centered_square(10), KernelSpec{KernelShape::box, 2.0}).wb_bound ==
          Approx(0.0625));
    CHECK_THROWS(bandwidth(0, ObservationWindow::centered_square(10)));
}

TEST_CASE("Monte-Carlo covariance with one replication is the naive estimate") {
    MamConfig c;
    c.rho = 50;
    c.kappa.kappa12 = 0.2;
    c.window = ObservationWindow::centered_square(1000);
    c.seed = 77;
    const auto mc = monte_carlo_sigma(c, 1, kBins, kUniform);
    CHECK(mc.tag == EstimatorTag::monte_carlo);
    Rng rng = make_rng(substream_seed(c.seed, "mc-sigma", 0));
    const auto x = mam_realize(c, rng);
    CHECK(mc.sigma == sigma2(x, c.window, kBins, kUniform).sigma);
    CHECK_THROWS(monte_carlo_sigma(c, 0, kBins, kUniform));
}

TEST_CASE("Monte-Carlo covariance does not depend on the thread count") {
    MamConfig c;
    c.rho = 100;
    c.window = ObservationWindow::centered_square(1500);
    c.seed = 5;
    const auto one = monte_carlo_sigma(c, 24, kBins, kUniform, 1);
    const auto four = monte_carlo_sigma(c, 24, kBins, kUniform, 4);
    CHECK(one.sigma == four.sigma);
}

TEST_CASE("naive and edge-corrected estimators are centred on the analytic covariance") {
    MamConfig c;
    c.window = ObservationWindow::centered_square(1500);
    c.intensity = 3125.0 / 9e6;
    const auto analytic = sigma_analytic_independent(c.intensity, kUniform).sigma;
    const int reps = 2000;
    std::vector<Matrix> s1s, s2s;
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_rng(substream_seed(31, "unbiased", r));
        const auto x = mam_realize(c, rng);
        s2s.push_back(sigma2(x, c.window, kBins, kUniform).sigma);
        if (r < 300) {
            s1s.push_back(sigma1(x, c.window, kBins, kUniform).sigma);
        }
    }
    for (const auto* sample : {&s1s, &s2s}) {
        const double n = double(sample->size());
        for (int i = 0; i < 8; ++i) {
            for (int j = i; j < 8; ++j) {
                double m = 0, v = 0;
                for (const auto& s : *sample) {
                    m += s(i, j) / n;
                }
                for (const auto& s : *sample) {
                    v += (s(i, j) - m) * (s(i, j) - m) / (n - 1);
                }
                INFO("entry " << i << "," << j << " reps " << n);
                CHECK(std::abs(m - analytic(i, j)) < 3.5 * std::sqrt(v / n));
            }
        }
    }
}

TEST_CASE("long-range mark association inflates the variance") {
    MamConfig c;
    c.rho = 300;
    c.window = ObservationWindow::centered_square(3000);
    c.intensity = 3125.0 / 9e6;
    c.seed = 8;
    const auto mc = monte_carlo_sigma(c, 1000, kBins, kUniform, default_thread_count());
    const auto analytic = sigma_analytic_independent(c.intensity, kUniform).sigma;
    for (int i = 0; i < 8; ++i) {
        CHECK(mc.sigma(i, i) > 2 * analytic(i, i));
    }
}
