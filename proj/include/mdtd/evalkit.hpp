#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mdtd/calibrate.hpp"
#include "mdtd/net.hpp"

namespace mdtd {

struct EvalCounts {
    std::size_t true_pos = 0;
    std::size_t false_pos = 0;
    std::size_t true_neg = 0;
    std::size_t false_neg = 0;
};

struct EvalReport {
    double tpr = 0.0;
    double fpr = 0.0;
    double tnr = 0.0;
    double f1 = 0.0;
    EvalCounts counts;
    double gamma = 0.0;
    double alpha = 0.0;
    ThresholdMode mode = ThresholdMode::gaussian;
    // optional context
    double acc = -1.0;
    double asr = -1.0;
};

struct RocPoint {
    double alpha = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
};

// F1 = 2*TPR*TNR / (TPR + TNR) with TNR = 1 - FPR; 0 when TPR + TNR = 0.
double f1(double tpr, double fpr);

// Classifies every distance with the calibrated rule; trojan distances are
// positives, clean distances negatives.
EvalReport evaluate(const Calibration& cal, const std::vector<double>& clean_dists,
                    const std::vector<double>& trojan_dists);

// One (alpha, tpr, fpr) point per grid value under |delta - mu| > alpha*sigma.
RocCurve roc_sweep(const std::vector<double>& clean_dists,
                   const std::vector<double>& trojan_dists, double mu, double sigma,
                   const std::vector<double>& alpha_grid, Sided sided = Sided::two);

double accuracy(const Network& net, const Dataset& ds);

// One-sided Welch test p-value for mean(a) > mean(b).
double welch_p_greater(const std::vector<double>& a, const std::vector<double>& b);

std::string report_json(const EvalReport& r);
std::string roc_csv(const RocCurve& curve);

}  // namespace mdtd
