#include "mdtd/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mdtd {

namespace {

// FNV-1a over the sample payload; ties the HSJ stream to the sample itself
// so batch results are independent of input order.
std::uint64_t sample_hash(const Tensor& x) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const unsigned char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (double v : x.data)
        mix(reinterpret_cast<const unsigned char*>(&v), sizeof(v));
    return h;
}

Tensor sign_of(const Tensor& g) {
    Tensor d = g;
    for (double& v : d.data) v = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    return d;
}

Tensor axpy(const Tensor& x, double a, const Tensor& d) {
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += a * d.data[i];
    return out;
}

Tensor lerp(const Tensor& a, const Tensor& b, double t) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = (1.0 - t) * a.data[i] + t * b.data[i];
    return out;
}

}  // namespace

DistanceEstimate fgsm_distance(const ModelOracle& oracle, const Tensor& x,
                               const FgsmConfig& cfg) {
    if (!(cfg.bisect_tol > 0.0 && cfg.bisect_tol < cfg.eps_max))
        throw std::invalid_argument("fgsm: requires 0 < bisect_tol < eps_max");
    const std::uint64_t q0 = oracle.queries();
    const std::size_t y0 = oracle.label(x);
    const Tensor dir = sign_of(oracle.loss_grad(x, y0));

    auto flips = [&](double eps) {
        return oracle.label(clamp(axpy(x, eps, dir), cfg.clamp_lo, cfg.clamp_hi)) != y0;
    };

    DistanceEstimate est;
    est.norm = DistNorm::linf;
    if (!flips(cfg.eps_max)) {
        est.value = cfg.eps_max;
        est.converged = false;
        est.queries_used = oracle.queries() - q0;
        return est;
    }
    double lo = 0.0, hi = cfg.eps_max;
    while (hi - lo > cfg.bisect_tol) {
        const double m = 0.5 * (lo + hi);
        if (flips(m))
            hi = m;
        else
            lo = m;
    }
    est.value = hi;
    est.converged = true;
    est.witness = clamp(axpy(x, hi, dir), cfg.clamp_lo, cfg.clamp_hi);
    est.queries_used = oracle.queries() - q0;
    return est;
}

DistanceEstimate ifgsm_distance(const ModelOracle& oracle, const Tensor& x,
                                const IfgsmConfig& cfg) {
    if (cfg.step_size <= 0.0) throw std::invalid_argument("ifgsm: step_size must be > 0");
    if (cfg.max_steps == 0) throw std::invalid_argument("ifgsm: max_steps must be >= 1");
    const std::uint64_t q0 = oracle.queries();
    const std::size_t y0 = oracle.label(x);

    DistanceEstimate est;
    est.norm = DistNorm::linf;
    Tensor cur = x;
    for (std::size_t k = 0; k < cfg.max_steps; ++k) {
        const Tensor dir = sign_of(oracle.loss_grad(cur, y0));
        cur = clamp(axpy(cur, cfg.step_size, dir), cfg.clamp_lo, cfg.clamp_hi);
        if (oracle.label(cur) != y0) {
            est.value = linf_dist(cur, x);
            est.converged = true;
            est.witness = cur;
            est.queries_used = oracle.queries() - q0;
            return est;
        }
    }
    est.value = linf_dist(cur, x);
    est.converged = false;
    est.queries_used = oracle.queries() - q0;
    return est;
}

DistanceEstimate hsj_distance(const ModelOracle& oracle, const Tensor& x,
                              const HsjConfig& cfg) {
    if (cfg.iterations == 0 || cfg.init_grad_queries == 0 || cfg.binary_tol <= 0.0 ||
        cfg.max_queries == 0)
        throw std::invalid_argument("hsj: all config fields must be positive");

    const std::uint64_t q0 = oracle.queries();
    std::mt19937_64 rng(cfg.seed);
    const std::size_t dim = x.size();

    bool budget_hit = false;
    auto spent = [&] { return oracle.queries() - q0; };
    // returns misclassification flag; tracks the query budget
    auto adversarial = [&](const Tensor& z, std::size_t y0) -> bool {
        if (spent() >= cfg.max_queries) {
            budget_hit = true;
            return false;
        }
        return oracle.label(z) != y0;
    };

    const std::size_t y0 = oracle.label(x);

    // seeded random search for a misclassified starting point
    std::uniform_real_distribution<double> init_u(cfg.init_lo, cfg.init_hi);
    Tensor adv(x.shape);
    bool found = false;
    for (int attempt = 0; attempt < 1000 && !budget_hit; ++attempt) {
        for (double& v : adv.data) v = init_u(rng);
        if (adversarial(adv, y0)) {
            found = true;
            break;
        }
    }
    if (!found) throw std::runtime_error("hsj: no misclassified initializer found");

    // project onto the boundary along [x, adv]
    auto project = [&](const Tensor& outside) -> Tensor {
        double lo = 0.0, hi = 1.0;
        while (hi - lo > cfg.binary_tol && !budget_hit) {
            const double m = 0.5 * (lo + hi);
            if (adversarial(lerp(x, outside, m), y0))
                hi = m;
            else
                lo = m;
        }
        return lerp(x, outside, hi);
    };

    Tensor cur = project(adv);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t t = 1; t <= cfg.iterations && !budget_hit; ++t) {
        const double dist = l2_dist(cur, x);
        const double probe_radius = dist / static_cast<double>(dim);
        const std::size_t batch = static_cast<std::size_t>(
            static_cast<double>(cfg.init_grad_queries) * std::sqrt(static_cast<double>(t)));

        // Monte Carlo estimate of the boundary normal from sign agreement
        Tensor grad(x.shape, 0.0);
        std::vector<Tensor> probes;
        std::vector<double> signs;
        probes.reserve(batch);
        signs.reserve(batch);
        double sign_sum = 0.0;
        for (std::size_t b = 0; b < batch && !budget_hit; ++b) {
            Tensor u(x.shape);
            for (double& v : u.data) v = gauss(rng);
            const double nrm = l2_norm(u);
            for (double& v : u.data) v /= nrm;
            const double s = adversarial(axpy(cur, probe_radius, u), y0) ? 1.0 : -1.0;
            probes.push_back(std::move(u));
            signs.push_back(s);
            sign_sum += s;
        }
        if (probes.empty()) break;
        const double mean_sign = sign_sum / static_cast<double>(probes.size());
        for (std::size_t b = 0; b < probes.size(); ++b) {
            const double w = signs[b] - mean_sign;
            for (std::size_t i = 0; i < dim; ++i) grad.data[i] += w * probes[b].data[i];
        }
        double gnorm = l2_norm(grad);
        if (gnorm == 0.0) {
            // all probes agreed; fall back to the raw sign direction
            for (std::size_t b = 0; b < probes.size(); ++b)
                for (std::size_t i = 0; i < dim; ++i)
                    grad.data[i] += signs[b] * probes[b].data[i];
            gnorm = l2_norm(grad);
            if (gnorm == 0.0) continue;
        }
        for (double& v : grad.data) v /= gnorm;

        // geometric step search away from the boundary, then re-project
        double step = dist / std::sqrt(static_cast<double>(t));
        bool stepped = false;
        while (step > 1e-12 && !budget_hit) {
            if (adversarial(axpy(cur, step, grad), y0)) {
                stepped = true;
                break;
            }
            step *= 0.5;
        }
        if (!stepped) continue;
        Tensor candidate = project(axpy(cur, step, grad));
        if (l2_dist(candidate, x) < l2_dist(cur, x)) cur = std::move(candidate);
    }

    DistanceEstimate est;
    est.norm = DistNorm::l2;
    est.value = l2_dist(cur, x);
    est.converged = !budget_hit;
    est.witness = std::move(cur);
    est.queries_used = spent();
    return est;
}

std::vector<DistanceEstimate> distance_batch(const Network& net, OracleAccess access,
                                             const std::vector<Tensor>& samples,
                                             const EstimatorConfig& cfg) {
    if (samples.empty()) throw std::invalid_argument("distance_batch: empty sample list");
    std::vector<DistanceEstimate> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ModelOracle oracle(net, access);
        try {
            if (const auto* f = std::get_if<FgsmConfig>(&cfg)) {
                out.push_back(fgsm_distance(oracle, samples[i], *f));
            } else if (const auto* g = std::get_if<IfgsmConfig>(&cfg)) {
                out.push_back(ifgsm_distance(oracle, samples[i], *g));
            } else {
                HsjConfig h = std::get<HsjConfig>(cfg);
                h.seed ^= sample_hash(samples[i]);  // per-sample stream
                out.push_back(hsj_distance(oracle, samples[i], h));
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("sample " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

std::string distances_csv(const std::vector<DistanceEstimate>& estimates) {
    std::ostringstream os;
    os << "sample_index,distance,norm,queries,converged\n";
    os.precision(17);
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const DistanceEstimate& e = estimates[i];
        os << i << ',' << e.value << ','
           << (e.norm == DistNorm::linf ? "linf" : "l2") << ',' << e.queries_used << ','
           << (e.converged ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace mdtd
