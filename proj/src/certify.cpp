#include "mdtd/certify.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mdtd/calibrate.hpp"

namespace mdtd {

double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0))
        throw std::domain_error("normal_quantile: q must be in (0,1)");
    return -std::sqrt(2.0) * inv_erfc(2.0 * q);
}

double CertifyConfig::effective_cap() const {
    if (p_cap > 0.0) return p_cap;
    return 1.0 - 1.0 / (2.0 * static_cast<double>(n_samples));
}

void CertifyConfig::validate() const {
    if (noise_sigma <= 0.0) throw std::invalid_argument("certify: noise_sigma must be > 0");
    if (n_samples < 100) throw std::invalid_argument("certify: n_samples must be >= 100");
    const double cap = effective_cap();
    if (!(cap > 0.5 && cap < 1.0))
        throw std::invalid_argument("certify: p_cap must be in (0.5, 1)");
}

RadiusEstimate certified_radius(const Network& net, const Tensor& x,
                                const CertifyConfig& cfg) {
    cfg.validate();
    const std::size_t y0 = predict(net, x);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, cfg.noise_sigma);
    std::size_t agree = 0;
    Tensor z = x;
    for (std::size_t k = 0; k < cfg.n_samples; ++k) {
        for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = x.data[i] + gauss(rng);
        if (predict(net, z) == y0) ++agree;
    }
    RadiusEstimate est;
    est.p_hat = static_cast<double>(agree) / static_cast<double>(cfg.n_samples);
    if (est.p_hat <= 0.5)
        est.radius = 0.0;
    else
        est.radius =
            cfg.noise_sigma * normal_quantile(std::min(est.p_hat, cfg.effective_cap()));
    return est;
}

std::vector<RadiusEstimate> radius_batch(const Network& net,
                                         const std::vector<Tensor>& samples,
                                         const CertifyConfig& cfg) {
    if (samples.empty()) throw std::invalid_argument("radius_batch: empty sample list");
    std::vector<RadiusEstimate> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CertifyConfig per = cfg;
        per.seed = cfg.seed + i;
        out.push_back(certified_radius(net, samples[i], per));
    }
    return out;
}

std::pair<double, double> mean_radius(const Network& net,
                                      const std::vector<Tensor>& samples,
                                      const CertifyConfig& cfg) {
    auto radii = radius_batch(net, samples, cfg);
    double mean = 0.0;
    for (const auto& r : radii) mean += r.radius;
    mean /= static_cast<double>(radii.size());
    double var = 0.0;
    for (const auto& r : radii) var += (r.radius - mean) * (r.radius - mean);
    var /= static_cast<double>(radii.size());
    return {mean, std::sqrt(var)};
}

std::string radii_csv(const std::vector<RadiusEstimate>& radii) {
    std::ostringstream os;
    os << "sample_index,radius,p_hat\n";
    os.precision(17);
    for (std::size_t i = 0; i < radii.size(); ++i)
        os << i << ',' << radii[i].radius << ',' << radii[i].p_hat << '\n';
    return os.str();
}

}  // namespace mdtd
