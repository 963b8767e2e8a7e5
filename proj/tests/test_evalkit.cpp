#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mdtd/evalkit.hpp"

using namespace mdtd;

TEST_CASE("f1 values") {
    CHECK(f1(1.0, 0.0) == doctest::Approx(1.0));
    CHECK(std::fabs(f1(0.9629, 0.1288) - 0.91) < 0.005);
    CHECK(std::fabs(f1(1.00, 0.0789) - 0.96) < 0.005);
    CHECK(f1(0.0, 1.0) == doctest::Approx(0.0));  // tpr + tnr == 0
    CHECK_THROWS_AS(f1(1.2, 0.0), std::domain_error);
    CHECK_THROWS_AS(f1(0.5, -0.1), std::domain_error);
}

TEST_CASE("f1 range and perfect-detector equivalence") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double tpr = u(rng), fpr = u(rng);
        const double v = f1(tpr, fpr);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        if (v == 1.0) {
            CHECK(tpr == 1.0);
            CHECK(fpr == 0.0);
        }
    }
}

TEST_CASE("evaluate on separated and identical lists") {
    Calibration cal;
    cal.mu = 1.0;
    cal.sigma = 0.1;
    cal.alpha = 2.0;
    cal.gamma = 0.05;

    std::vector<double> clean(20, 1.0);
    std::vector<double> trojan(20, 3.0);
    EvalReport r = evaluate(cal, clean, trojan);
    CHECK(r.tpr == doctest::Approx(1.0));
    CHECK(r.fpr == doctest::Approx(0.0));
    CHECK(r.tnr == doctest::Approx(1.0));
    CHECK(r.f1 == doctest::Approx(1.0));
    CHECK(r.counts.true_pos + r.counts.false_neg == trojan.size());
    CHECK(r.counts.true_neg + r.counts.false_pos == clean.size());

    std::vector<double> same{0.9, 1.0, 1.3, 2.5};
    EvalReport sym = evaluate(cal, same, same);
    CHECK(sym.tpr == doctest::Approx(sym.fpr));

    CHECK_THROWS(evaluate(cal, {}, trojan));
}

TEST_CASE("f1 recomputed from a report matches") {
    Calibration cal;
    cal.mu = 0.5;
    cal.sigma = 0.2;
    cal.alpha = 1.5;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> dc(0.5, 0.2), dt(1.2, 0.3);
    std::vector<double> clean, trojan;
    for (int i = 0; i < 200; ++i) {
        clean.push_back(std::fabs(dc(rng)));
        trojan.push_back(std::fabs(dt(rng)));
    }
    EvalReport r = evaluate(cal, clean, trojan);
    CHECK(std::fabs(r.f1 - f1(r.tpr, r.fpr)) < 1e-12);
}

TEST_CASE("roc sweep endpoints and pointwise agreement") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> dc(0.5, 0.1), dt(1.5, 0.2);
    std::vector<double> clean, trojan;
    for (int i = 0; i < 100; ++i) {
        clean.push_back(std::fabs(dc(rng)));
        trojan.push_back(std::fabs(dt(rng)));
    }
    std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 4.0, 100.0};
    RocCurve curve = roc_sweep(clean, trojan, 0.5, 0.1, grid);
    REQUIRE(curve.points.size() == grid.size());
    CHECK(curve.points.front().tpr == doctest::Approx(1.0));
    CHECK(curve.points.front().fpr > 0.99);  // alpha=0 flags every unequal distance
    CHECK(curve.points.back().tpr == doctest::Approx(0.0));
    CHECK(curve.points.back().fpr == doctest::Approx(0.0));

    // monotone nonincreasing and equal to pointwise evaluate()
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Calibration cal;
        cal.mu = 0.5;
        cal.sigma = 0.1;
        cal.alpha = grid[i];
        EvalReport r = evaluate(cal, clean, trojan);
        CHECK(curve.points[i].tpr == doctest::Approx(r.tpr));
        CHECK(curve.points[i].fpr == doctest::Approx(r.fpr));
        if (i > 0) {
            CHECK(curve.points[i].tpr <= curve.points[i - 1].tpr + 1e-12);
            CHECK(curve.points[i].fpr <= curve.points[i - 1].fpr + 1e-12);
        }
    }

    CHECK_THROWS(roc_sweep(clean, trojan, 0.5, 0.1, {1.0, 1.0}));
    CHECK_THROWS(roc_sweep(clean, trojan, 0.5, 0.1, {}));
}

TEST_CASE("accuracy") {
    Network net;
    net.input_shape = {2};
    net.num_classes = 2;
    Dense d;
    d.in = 2;
    d.out = 2;
    d.weight = {1.0, 0.0, 0.0, 1.0};
    d.bias = {0.0, 0.0};
    net.layers.push_back(d);

    Dataset ds;
    ds.samples.push_back({Tensor({2}, {1.0, 0.0}), 0});
    ds.samples.push_back({Tensor({2}, {0.0, 1.0}), 1});
    ds.samples.push_back({Tensor({2}, {1.0, 0.0}), 1});
    ds.samples.push_back({Tensor({2}, {0.0, 1.0}), 0});
    CHECK(accuracy(net, ds) == doctest::Approx(0.5));

    Dataset shuffled = ds;
    std::reverse(shuffled.samples.begin(), shuffled.samples.end());
    CHECK(accuracy(net, shuffled) == doctest::Approx(0.5));
    CHECK_THROWS(accuracy(net, Dataset{}));
}

TEST_CASE("welch one-sided p-value behaves") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> hi(2.0, 0.3), lo(1.0, 0.3);
    std::vector<double> a, b;
    for (int i = 0; i < 50; ++i) {
        a.push_back(hi(rng));
        b.push_back(lo(rng));
    }
    CHECK(welch_p_greater(a, b) < 1e-6);
    CHECK(welch_p_greater(b, a) > 0.99);
    CHECK(welch_p_greater(a, a) == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("report json and roc csv serialization") {
    Calibration cal;
    cal.mu = 1.0;
    cal.sigma = 0.1;
    cal.alpha = 1.96;
    cal.gamma = 0.05;
    EvalReport r = evaluate(cal, {1.0, 1.01}, {2.0, 2.2});
    r.acc = 0.987654;
    std::string j = report_json(r);
    CHECK(j.find("\"tpr\"") != std::string::npos);
    CHECK(j.find("\"acc\": 0.9877") != std::string::npos);  // 4 decimals at serialization

    RocCurve c;
    c.points.push_back({0.0, 1.0, 1.0});
    c.points.push_back({1.0, 0.5, 0.25});
    std::string csv = roc_csv(c);
    CHECK(csv.find("alpha,tpr,fpr\n") == 0);
    CHECK(csv.find("1,0.5,0.25") != std::string::npos);
}
