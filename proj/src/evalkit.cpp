#include "mdtd/evalkit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mdtd {

namespace {

double round4(double v) { return std::round(v * 1e4) / 1e4; }

void fill_rates(EvalReport& r) {
    const std::size_t pos = r.counts.true_pos + r.counts.false_neg;
    const std::size_t neg = r.counts.true_neg + r.counts.false_pos;
    r.tpr = pos ? static_cast<double>(r.counts.true_pos) / static_cast<double>(pos) : 0.0;
    r.fpr = neg ? static_cast<double>(r.counts.false_pos) / static_cast<double>(neg) : 0.0;
    r.tnr = 1.0 - r.fpr;
    r.f1 = f1(r.tpr, r.fpr);
}

std::pair<double, double> mean_var(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, s / static_cast<double>(v.size() - 1)};
}

}  // namespace

double f1(double tpr, double fpr) {
    if (tpr < 0.0 || tpr > 1.0 || fpr < 0.0 || fpr > 1.0)
        throw std::domain_error("f1: rates must be in [0,1]");
    const double tnr = 1.0 - fpr;
    if (tpr + tnr == 0.0) return 0.0;
    return 2.0 * tpr * tnr / (tpr + tnr);
}

EvalReport evaluate(const Calibration& cal, const std::vector<double>& clean_dists,
                    const std::vector<double>& trojan_dists) {
    if (clean_dists.empty() || trojan_dists.empty())
        throw std::invalid_argument("evaluate: both distance lists must be nonempty");
    EvalReport r;
    for (double d : clean_dists) {
        if (classify(cal, d).is_trojan)
            ++r.counts.false_pos;
        else
            ++r.counts.true_neg;
    }
    for (double d : trojan_dists) {
        if (classify(cal, d).is_trojan)
            ++r.counts.true_pos;
        else
            ++r.counts.false_neg;
    }
    fill_rates(r);
    r.gamma = cal.gamma;
    r.alpha = cal.alpha;
    r.mode = cal.mode;
    return r;
}

RocCurve roc_sweep(const std::vector<double>& clean_dists,
                   const std::vector<double>& trojan_dists, double mu, double sigma,
                   const std::vector<double>& alpha_grid, Sided sided) {
    if (clean_dists.empty() || trojan_dists.empty())
        throw std::invalid_argument("roc_sweep: both distance lists must be nonempty");
    if (alpha_grid.empty())
        throw std::invalid_argument("roc_sweep: empty alpha grid");
    for (std::size_t i = 1; i < alpha_grid.size(); ++i)
        if (alpha_grid[i] <= alpha_grid[i - 1])
            throw std::invalid_argument("roc_sweep: alpha grid must be strictly increasing");

    RocCurve curve;
    for (double a : alpha_grid) {
        Calibration cal;
        cal.mu = mu;
        cal.sigma = sigma;
        cal.alpha = a;
        cal.sided = sided;
        cal.n = 2;
        EvalReport r = evaluate(cal, clean_dists, trojan_dists);
        curve.points.push_back({a, r.tpr, r.fpr});
    }
    return curve;
}

double accuracy(const Network& net, const Dataset& ds) {
    if (ds.empty()) throw std::invalid_argument("accuracy: empty dataset");
    std::size_t hit = 0;
    for (const Sample& s : ds.samples)
        if (predict(net, s.x) == s.label) ++hit;
    return static_cast<double>(hit) / static_cast<double>(ds.size());
}

double welch_p_greater(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch: need >= 2 samples per group");
    auto [ma, va] = mean_var(a);
    auto [mb, vb] = mean_var(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) return ma > mb ? 0.0 : 1.0;
    const double t = (ma - mb) / std::sqrt(se2);
    const double nu =
        se2 * se2 / (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    return 1.0 - t_cdf(t, nu);
}

std::string report_json(const EvalReport& r) {
    nlohmann::json j;
    j["tpr"] = round4(r.tpr);
    j["fpr"] = round4(r.fpr);
    j["tnr"] = round4(r.tnr);
    j["f1"] = round4(r.f1);
    j["counts"] = {{"true_pos", r.counts.true_pos},
                   {"false_pos", r.counts.false_pos},
                   {"true_neg", r.counts.true_neg},
                   {"false_neg", r.counts.false_neg}};
    j["gamma"] = r.gamma;
    j["alpha"] = r.alpha;
    j["mode"] = r.mode == ThresholdMode::gaussian ? "gaussian" : "student";
    if (r.acc >= 0.0) j["acc"] = round4(r.acc);
    if (r.asr >= 0.0) j["asr"] = round4(r.asr);
    return j.dump(2);
}

std::string roc_csv(const RocCurve& curve) {
    std::ostringstream os;
    os << "alpha,tpr,fpr\n";
    os.precision(17);
    for (const RocPoint& p : curve.points)
        os << p.alpha << ',' << p.tpr << ',' << p.fpr << '\n';
    return os.str();
}

}  // namespace mdtd
