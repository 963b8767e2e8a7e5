#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mdtd/net.hpp"

namespace mdtd {

struct CertifyConfig {
    double noise_sigma = 0.25;
    std::size_t n_samples = 1000;
    double p_cap = 0.0;  // <= 0 means the default 1 - 1/(2*n_samples)
    std::uint64_t seed = 0;

    double effective_cap() const;
    void validate() const;
};

struct RadiusEstimate {
    double radius = 0.0;
    double p_hat = 0.0;
};

// Monte Carlo smoothing radius: p_hat = fraction of Gaussian perturbations
// keeping the original label; radius = sigma * Phi^-1(min(p_hat, p_cap)),
// zero when p_hat <= 0.5.
RadiusEstimate certified_radius(const Network& net, const Tensor& x,
                                const CertifyConfig& cfg);

// Per-sample radii with per-sample seeded streams; returns (mean, population
// standard deviation).
std::pair<double, double> mean_radius(const Network& net,
                                      const std::vector<Tensor>& samples,
                                      const CertifyConfig& cfg);

std::vector<RadiusEstimate> radius_batch(const Network& net,
                                         const std::vector<Tensor>& samples,
                                         const CertifyConfig& cfg);

// CSV with header sample_index,radius,p_hat.
std::string radii_csv(const std::vector<RadiusEstimate>& radii);

// Standard normal quantile via inv_erfc.
double normal_quantile(double q);

}  // namespace mdtd
