#include "mdtd/calibrate.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace mdtd {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double t_pdf(double t, double nu) {
    const double c = std::exp(std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0)) /
                     std::sqrt(nu * kPi);
    return c * std::pow(1.0 + t * t / nu, -(nu + 1.0) / 2.0);
}

double simpson(double (*f)(double, double), double nu, double a, double b) {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a, nu) + 4.0 * f(m, nu) + f(b, nu));
}

double adaptive_simpson(double (*f)(double, double), double nu, double a, double b,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double left = simpson(f, nu, a, m);
    const double right = simpson(f, nu, m, b);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, nu, a, m, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, nu, m, b, right, tol / 2.0, depth - 1);
}

double integrate(double (*f)(double, double), double nu, double a, double b,
                 double tol) {
    if (a == b) return 0.0;
    return adaptive_simpson(f, nu, a, b, simpson(f, nu, a, b), tol, 48);
}

}  // namespace

double erfc(double z) {
    if (!std::isfinite(z)) throw std::invalid_argument("erfc: non-finite argument");
    return std::erfc(z);
}

double inv_erfc(double y) {
    if (!(y > 0.0 && y < 2.0))
        throw std::domain_error("inv_erfc: argument must be in (0,2)");
    double lo = -28.0, hi = 28.0;  // erfc spans (0,2) well inside this bracket
    double z = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double fz = erfc(z) - y;
        if (std::fabs(fz) <= 1e-15) break;
        if (fz > 0.0)
            lo = z;  // erfc decreasing: value too high means z too small
        else
            hi = z;
        // Newton step, kept only when it stays inside the bracket
        const double dz = fz / (2.0 / std::sqrt(kPi) * std::exp(-z * z));
        double next = z + dz;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (std::fabs(next - z) < 1e-15 && std::fabs(fz) < 1e-12) {
            z = next;
            break;
        }
        z = next;
    }
    return z;
}

double alpha_gaussian(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("alpha_gaussian: gamma must be in (0,1)");
    return std::sqrt(2.0) * inv_erfc(gamma);
}

double t_cdf(double t, double nu) {
    if (nu < 1.0) throw std::domain_error("t_cdf: nu must be >= 1");
    if (!std::isfinite(t)) throw std::invalid_argument("t_cdf: non-finite argument");
    const double a = std::fabs(t);
    double half;
    if (a <= 40.0) {
        half = integrate(t_pdf, nu, 0.0, a, 1e-12);
    } else {
        // split so the adaptive rule resolves the peak near 0 first
        half = integrate(t_pdf, nu, 0.0, 40.0, 1e-12) +
               integrate(t_pdf, nu, 40.0, a, 1e-12);
    }
    half = std::min(half, 0.5);
    return t >= 0.0 ? 0.5 + half : 0.5 - half;
}

double t_quantile(double q, double nu) {
    if (!(q > 0.0 && q < 1.0))
        throw std::domain_error("t_quantile: q must be in (0,1)");
    if (nu < 1.0) throw std::domain_error("t_quantile: nu must be >= 1");
    if (q == 0.5) return 0.0;
    const bool upper = q > 0.5;
    const double target = upper ? q : 1.0 - q;
    double lo = 0.0, hi = 1.0;
    while (t_cdf(hi, nu) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) break;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        const double m = 0.5 * (lo + hi);
        if (t_cdf(m, nu) < target)
            lo = m;
        else
            hi = m;
    }
    const double t = 0.5 * (lo + hi);
    return upper ? t : -t;
}

double alpha_student(double gamma, double mu, double sigma, std::size_t n) {
    if (n < 2) throw std::invalid_argument("alpha_student: n must be >= 2");
    if (sigma <= 0.0)
        throw std::invalid_argument("alpha_student: degenerate spread (sigma <= 0)");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("alpha_student: gamma must be in (0,1)");
    const double t = t_quantile(1.0 - gamma / 2.0, static_cast<double>(n - 1));
    return t * mu / (sigma * std::sqrt(static_cast<double>(n)));
}

Calibration calibrate(const std::vector<double>& distances, double gamma, Sided sided) {
    if (distances.size() < 2)
        throw std::invalid_argument("calibrate: need at least 2 distances");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("calibrate: gamma must be in (0,1)");
    double mu = 0.0;
    for (double d : distances) {
        if (!std::isfinite(d) || d < 0.0)
            throw std::invalid_argument("calibrate: distances must be finite nonnegative");
        mu += d;
    }
    const double n = static_cast<double>(distances.size());
    mu /= n;
    double ss = 0.0;
    for (double d : distances) ss += (d - mu) * (d - mu);
    const double sigma = std::sqrt(ss / (n - 1.0));
    if (sigma == 0.0)
        throw std::invalid_argument(
            "calibrate: degenerate spread (all distances identical)");

    Calibration cal;
    cal.mu = mu;
    cal.sigma = sigma;
    cal.n = distances.size();
    cal.gamma = gamma;
    cal.sided = sided;
    if (distances.size() > 30) {
        cal.mode = ThresholdMode::gaussian;
        cal.alpha = alpha_gaussian(gamma);
    } else {
        cal.mode = ThresholdMode::student;
        cal.alpha = alpha_student(gamma, mu, sigma, distances.size());
    }
    return cal;
}

Verdict classify(const Calibration& cal, double delta) {
    if (!std::isfinite(delta)) throw std::invalid_argument("classify: non-finite delta");
    Verdict v;
    v.distance = delta;
    v.score = (delta - cal.mu) / cal.sigma;
    if (cal.sided == Sided::two)
        v.is_trojan = std::fabs(delta - cal.mu) > cal.alpha * cal.sigma;
    else
        v.is_trojan = delta - cal.mu > cal.alpha * cal.sigma;
    return v;
}

double fpr_bound(double zeta_val, double alpha, double sigma) {
    if (zeta_val < 0.0 || alpha < 0.0 || sigma <= 0.0)
        throw std::domain_error("fpr_bound: requires zeta >= 0, alpha >= 0, sigma > 0");
    const double t = zeta_val + alpha * sigma;
    return std::exp(-t * t / (2.0 * sigma * sigma));
}

double zeta(double lipschitz, double grad_loss_norm, double sample_gap, double lambda) {
    const double denom = 2.0 * lambda - lipschitz * grad_loss_norm;
    if (denom <= 0.0)
        throw std::invalid_argument("zeta: requires 2*lambda > L*grad_loss_norm");
    return lipschitz * grad_loss_norm * sample_gap / denom;
}

std::string to_json(const Calibration& cal) {
    nlohmann::json j;
    j["mu"] = cal.mu;
    j["sigma"] = cal.sigma;
    j["n"] = cal.n;
    j["gamma"] = cal.gamma;
    j["alpha"] = cal.alpha;
    j["mode"] = cal.mode == ThresholdMode::gaussian ? "gaussian" : "student";
    j["sided"] = cal.sided == Sided::two ? "two" : "upper";
    return j.dump(2);
}

Calibration calibration_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Calibration cal;
    cal.mu = j.at("mu").get<double>();
    cal.sigma = j.at("sigma").get<double>();
    cal.n = j.at("n").get<std::size_t>();
    cal.gamma = j.at("gamma").get<double>();
    cal.alpha = j.at("alpha").get<double>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "gaussian")
        cal.mode = ThresholdMode::gaussian;
    else if (mode == "student")
        cal.mode = ThresholdMode::student;
    else
        throw std::invalid_argument("calibration: unknown mode " + mode);
    const std::string sided = j.at("sided").get<std::string>();
    if (sided == "two")
        cal.sided = Sided::two;
    else if (sided == "upper")
        cal.sided = Sided::upper;
    else
        throw std::invalid_argument("calibration: unknown sided " + sided);
    return cal;
}

}  // namespace mdtd
