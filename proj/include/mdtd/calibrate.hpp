#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mdtd {

enum class ThresholdMode { gaussian, student };
enum class Sided { two, upper };

// Stage-2 detector state fitted on clean-sample boundary distances.
struct Calibration {
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;
    double gamma = 0.0;
    double alpha = 0.0;
    ThresholdMode mode = ThresholdMode::gaussian;
    Sided sided = Sided::two;
};

struct Verdict {
    double distance = 0.0;
    bool is_trojan = false;
    double score = 0.0;  // (distance - mu) / sigma
};

// Complementary error function, |error| <= 1e-12 against the defining
// integral.
double erfc(double z);

// Inverse of erfc on (0,2); safeguarded bisection/Newton, residual <= 1e-10.
double inv_erfc(double y);

// alpha = sqrt(2) * erfc^-1(gamma), gamma in (0,1).
double alpha_gaussian(double gamma);

// Student-t CDF with nu degrees of freedom, by numeric integration of the
// density.
double t_cdf(double t, double nu);

// Quantile of the t distribution: CDF(t; nu) = q within 1e-8.
double t_quantile(double q, double nu);

// alpha = T_{(1-gamma/2),n-1} * mu / (sigma * sqrt(n)).
double alpha_student(double gamma, double mu, double sigma, std::size_t n);

Calibration calibrate(const std::vector<double>& distances, double gamma,
                      Sided sided = Sided::two);

Verdict classify(const Calibration& cal, double delta);

// Worst-case false positive probability exp(-(zeta + alpha*sigma)^2 / (2 sigma^2)).
double fpr_bound(double zeta, double alpha, double sigma);

// zeta = L*grad_loss_norm*sample_gap / (2*lambda - L*grad_loss_norm); the
// denominator must be positive.
double zeta(double lipschitz, double grad_loss_norm, double sample_gap, double lambda);

std::string to_json(const Calibration& cal);
Calibration calibration_from_json(const std::string& text);

}  // namespace mdtd
