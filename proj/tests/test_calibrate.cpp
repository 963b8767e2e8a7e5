#include <doctest.h>
#include <stdexcept>

#include <cmath>
#include <random>
#include <vector>

#include "mdtd/calibrate.hpp"
#include "oracles.hpp"

using namespace mdtd;

TEST_CASE("erfc basics") {
    CHECK(mdtd::erfc(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mdtd::erfc(-0.7) == doctest::Approx(2.0 - mdtd::erfc(0.7)).epsilon(1e-14));
    CHECK(std::fabs(mdtd::erfc(1.0) - 0.157299207) < 1e-8);
}

TEST_CASE("erfc matches the defining integral") {
    for (double z : {-3.0, -1.0, -0.2, 0.0, 0.3, 1.0, 2.5, 5.0})
        CHECK(std::fabs(mdtd::erfc(z) - oracles::erfc_quad(z)) < 1e-12);
}

TEST_CASE("inv_erfc") {
    CHECK(inv_erfc(1.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::fabs(inv_erfc(0.05) - 1.38590382) < 1e-7);
    for (double z : {0.1, 0.5, 2.0})
        CHECK(std::fabs(inv_erfc(mdtd::erfc(z)) - z) < 1e-9);
    // residual contract on a log-spaced grid
    for (double y = 1e-6; y < 2.0; y *= 3.7)
        CHECK(std::fabs(mdtd::erfc(inv_erfc(y)) - y) < 1e-10);
    CHECK_THROWS_AS(inv_erfc(0.0), std::domain_error);
    CHECK_THROWS_AS(inv_erfc(2.0), std::domain_error);
}

TEST_CASE("alpha_gaussian") {
    CHECK(std::fabs(alpha_gaussian(0.9999) - 0.0) < 1e-3);
    CHECK(std::fabs(alpha_gaussian(0.05) - 1.9599640) < 1e-6);
    CHECK(alpha_gaussian(0.01) > alpha_gaussian(0.05));
    CHECK(alpha_gaussian(0.05) > alpha_gaussian(0.2));
    CHECK_THROWS_AS(alpha_gaussian(1.5), std::domain_error);
    // two-sided tail mass really is gamma
    for (double g : {0.01, 0.05, 0.2}) {
        const double a = alpha_gaussian(g);
        CHECK(std::fabs(oracles::erfc_quad(a / std::sqrt(2.0)) - g) < 1e-9);
    }
}

TEST_CASE("t_quantile against integration oracle") {
    CHECK(t_quantile(0.5, 7.0) == doctest::Approx(0.0));
    CHECK(std::fabs(t_quantile(0.975, 9.0) - 2.2622) < 1e-3);
    CHECK(std::fabs(t_quantile(0.975, 1e6) - 1.9600) < 1e-3);
    for (double nu : {1.0, 2.0, 9.0, 29.0, 100.0}) {
        for (double q : {0.6, 0.9, 0.975}) {
            const double t = t_quantile(q, nu);
            CHECK(std::fabs(t_cdf(t, nu) - q) < 1e-8);
            CHECK(std::fabs(t - oracles::t_quantile_bisect(q, nu)) < 1e-4);
        }
    }
}

TEST_CASE("t_cdf symmetry and limits") {
    CHECK(t_cdf(0.0, 5.0) == doctest::Approx(0.5));
    CHECK(std::fabs(t_cdf(-1.3, 4.0) + t_cdf(1.3, 4.0) - 1.0) < 1e-12);
    CHECK(std::fabs(t_cdf(2.0, 9.0) - oracles::t_cdf_quad(2.0, 9.0)) < 1e-8);
}

TEST_CASE("alpha_student") {
    CHECK(alpha_student(0.05, 0.0, 1.0, 10) == doctest::Approx(0.0));
    CHECK(std::fabs(alpha_student(0.05, 1.0, 1.0, 10) - 2.2622 / std::sqrt(10.0)) < 1e-3);
    CHECK(std::fabs(alpha_student(0.05, 1.0, 2.0, 10) -
                    0.5 * alpha_student(0.05, 1.0, 1.0, 10)) < 1e-12);
    CHECK_THROWS(alpha_student(0.05, 1.0, 0.0, 10));
}

TEST_CASE("calibrate mode selection and statistics") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> d(1.0, 0.1);
    std::vector<double> dists;
    for (int i = 0; i < 100; ++i) dists.push_back(std::max(0.0, d(rng)));
    Calibration cal = calibrate(dists, 0.05);
    CHECK(cal.mode == ThresholdMode::gaussian);
    CHECK(std::fabs(cal.mu - 1.0) < 0.05);
    CHECK(std::fabs(cal.alpha - 1.9599640) < 1e-6);

    std::vector<double> ten(dists.begin(), dists.begin() + 10);
    CHECK(calibrate(ten, 0.05).mode == ThresholdMode::student);
    std::vector<double> thirtyone(dists.begin(), dists.begin() + 31);
    CHECK(calibrate(thirtyone, 0.05).mode == ThresholdMode::gaussian);
    std::vector<double> thirty(dists.begin(), dists.begin() + 30);
    CHECK(calibrate(thirty, 0.05).mode == ThresholdMode::student);

    CHECK_THROWS(calibrate({1.0}, 0.05));
    CHECK_THROWS(calibrate({1.0, 1.0, 1.0}, 0.05));
}

TEST_CASE("classify rule") {
    Calibration cal;
    cal.mu = 1.0;
    cal.sigma = 0.1;
    cal.alpha = 2.0;
    CHECK_FALSE(classify(cal, 1.0).is_trojan);
    CHECK(classify(cal, 1.25).is_trojan);
    CHECK(classify(cal, 0.75).is_trojan);
    cal.sided = Sided::upper;
    CHECK_FALSE(classify(cal, 0.75).is_trojan);
    CHECK(classify(cal, 1.25).is_trojan);
    CHECK(classify(cal, 1.25).score == doctest::Approx(2.5));
}

TEST_CASE("classify flag set shrinks as alpha grows") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d(1.0, 0.2);
    Calibration lo, hi;
    lo.mu = hi.mu = 1.0;
    lo.sigma = hi.sigma = 0.2;
    lo.alpha = 1.0;
    hi.alpha = 2.0;
    for (int i = 0; i < 2000; ++i) {
        const double x = std::fabs(d(rng));
        if (classify(hi, x).is_trojan) CHECK(classify(lo, x).is_trojan);
    }
}

TEST_CASE("empirical FPR tracks gamma in gaussian mode") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> d(1.0, 0.1);
    std::vector<double> train;
    for (int i = 0; i < 500; ++i) train.push_back(std::max(0.0, d(rng)));
    Calibration cal = calibrate(train, 0.05);
    const int n = 10000;
    int flagged = 0;
    for (int i = 0; i < n; ++i)
        if (classify(cal, std::max(0.0, d(rng))).is_trojan) ++flagged;
    const double rate = static_cast<double>(flagged) / n;
    CHECK(rate <= 0.05 + 3.0 * std::sqrt(0.05 / n));
}

TEST_CASE("fpr_bound") {
    CHECK(std::fabs(fpr_bound(0.0, 2.0, 1.0) - std::exp(-2.0)) < 1e-15);
    CHECK(std::fabs(fpr_bound(0.0, 2.0, 3.7) - std::exp(-2.0)) < 1e-15);
    CHECK(fpr_bound(0.0, 0.0, 1.0) == doctest::Approx(1.0));
    CHECK(fpr_bound(1.0, 2.0, 1.0) < fpr_bound(0.0, 2.0, 1.0));
    CHECK(fpr_bound(0.5, 1.5, 0.7) > 0.0);
    CHECK(fpr_bound(0.5, 1.5, 0.7) <= 1.0);
}

TEST_CASE("zeta") {
    CHECK(zeta(1.0, 1.0, 0.0, 1.0) == doctest::Approx(0.0));
    CHECK(zeta(1.0, 1.0, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(zeta(1.0, 1.0, 2.0, 1.0) > zeta(1.0, 1.0, 1.0, 1.0));
    CHECK_THROWS(zeta(2.0, 1.0, 1.0, 1.0));
}

TEST_CASE("calibration JSON round trip") {
    std::vector<double> dists;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d(0.5, 0.05);
    for (int i = 0; i < 40; ++i) dists.push_back(std::fabs(d(rng)));
    Calibration cal = calibrate(dists, 0.15, Sided::upper);
    Calibration back = calibration_from_json(to_json(cal));
    CHECK(back.mu == doctest::Approx(cal.mu));
    CHECK(back.sigma == doctest::Approx(cal.sigma));
    CHECK(back.n == cal.n);
    CHECK(back.alpha == doctest::Approx(cal.alpha));
    CHECK(back.mode == cal.mode);
    CHECK(back.sided == cal.sided);
}
