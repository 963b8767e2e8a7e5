// Command-line front end for the MDTD toolkit: dataset generation, clean and
// poisoned training, detector calibration, detection, and reporting.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mdtd/backdoor.hpp"
#include "mdtd/boundary.hpp"
#include "mdtd/calibrate.hpp"
#include "mdtd/certify.hpp"
#include "mdtd/evalkit.hpp"
#include "mdtd/io.hpp"
#include "mdtd/synth.hpp"

using namespace mdtd;
using nlohmann::json;

namespace {

std::vector<std::size_t> parse_dims(const std::string& text, char sep) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        if (tok.empty()) continue;
        out.push_back(static_cast<std::size_t>(std::stoull(tok)));
    }
    if (out.empty()) throw CLI::ValidationError("empty dimension list: " + text);
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<double> read_distance_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::vector<double> out;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string idx, dist;
        std::getline(ss, idx, ',');
        std::getline(ss, dist, ',');
        out.push_back(std::stod(dist));
    }
    return out;
}

// Flag bundles shared by several subcommands.

struct TriggerFlags {
    std::string kind = "patch";
    std::string shape = "1x2x2";
    std::string origin = "0,0,0";
    double value = 1.0;
    double alpha = 0.5;
    std::size_t target = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--trigger-kind", kind, "patch or blend")
            ->check(CLI::IsMember({"patch", "blend"}));
        cmd->add_option("--trigger-shape", shape, "pattern shape, e.g. 1x2x2");
        cmd->add_option("--trigger-origin", origin, "mask origin, e.g. 0,0,0");
        cmd->add_option("--trigger-value", value, "constant pattern value");
        cmd->add_option("--trigger-alpha", alpha, "blend weight in [0,1]");
        cmd->add_option("--target-class", target, "attacker target class");
    }

    TriggerSpec spec() const {
        TriggerSpec s;
        s.kind = kind == "patch" ? TriggerKind::patch : TriggerKind::blend;
        s.pattern = Tensor(parse_dims(shape, 'x'), value);
        s.mask_origin = parse_dims(origin + ",", ',');
        if (origin == "0" || origin.find(',') == std::string::npos)
            s.mask_origin = {static_cast<std::size_t>(std::stoull(origin))};
        else
            s.mask_origin = parse_dims(origin, ',');
        s.alpha = alpha;
        s.target_class = target;
        return s;
    }
};

struct EstimatorFlags {
    std::string estimator = "ifgsm";
    double eps_max = 1.0;
    double bisect_tol = 1e-3;
    double step_size = 0.02;
    std::size_t max_steps = 100;
    std::size_t iterations = 20;
    std::size_t b0 = 100;
    double binary_tol = 1e-4;
    std::uint64_t max_queries = 20000;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--estimator", estimator, "fgsm, ifgsm, or hsj")
            ->check(CLI::IsMember({"fgsm", "ifgsm", "hsj"}));
        cmd->add_option("--eps-max", eps_max, "fgsm search cap");
        cmd->add_option("--bisect-tol", bisect_tol, "fgsm bisection resolution");
        cmd->add_option("--step-size", step_size, "ifgsm step size");
        cmd->add_option("--max-steps", max_steps, "ifgsm iteration cap");
        cmd->add_option("--hsj-iterations", iterations, "hsj outer iterations");
        cmd->add_option("--hsj-b0", b0, "hsj initial gradient probes");
        cmd->add_option("--hsj-binary-tol", binary_tol, "hsj bisection tolerance");
        cmd->add_option("--max-queries", max_queries, "hsj label-query budget");
    }

    EstimatorConfig config() const {
        if (estimator == "fgsm") {
            FgsmConfig c;
            c.eps_max = eps_max;
            c.bisect_tol = bisect_tol;
            return c;
        }
        if (estimator == "ifgsm") {
            IfgsmConfig c;
            c.step_size = step_size;
            c.max_steps = max_steps;
            return c;
        }
        HsjConfig c;
        c.iterations = iterations;
        c.init_grad_queries = b0;
        c.binary_tol = binary_tol;
        c.max_queries = max_queries;
        c.seed = seed;
        return c;
    }

    OracleAccess access() const {
        return estimator == "hsj" ? OracleAccess::label_only : OracleAccess::gradient;
    }
};

struct TrainFlags {
    std::string arch = "cnn";
    std::string hidden = "32";
    std::size_t filters = 8;
    std::size_t epochs = 40;
    std::size_t batch_size = 16;
    double lr = 0.05;
    double momentum = 0.9;

    void attach(CLI::App* cmd) {
        cmd->add_option("--arch", arch, "mlp or cnn")
            ->check(CLI::IsMember({"mlp", "cnn"}));
        cmd->add_option("--hidden", hidden, "mlp hidden sizes, e.g. 32,16");
        cmd->add_option("--filters", filters, "cnn conv filters");
        cmd->add_option("--epochs", epochs);
        cmd->add_option("--batch-size", batch_size);
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--momentum", momentum);
    }

    Network fresh(const std::vector<std::size_t>& input_shape, std::size_t classes,
                  std::uint64_t seed) const {
        if (arch == "mlp") return make_mlp(input_shape, parse_dims(hidden, ','), classes, seed);
        return make_cnn(input_shape, filters, classes, seed);
    }

    TrainConfig config(std::uint64_t seed) const {
        TrainConfig c;
        c.epochs = epochs;
        c.batch_size = batch_size;
        c.learning_rate = lr;
        c.momentum = momentum;
        c.seed = seed;
        return c;
    }
};

std::size_t dataset_classes(const Dataset& ds) {
    std::size_t c = 0;
    for (const Sample& s : ds.samples) c = std::max(c, s.label + 1);
    return std::max<std::size_t>(c, 2);
}

// First `count` sample tensors (count 0 means all).
std::vector<Tensor> take_inputs(const Dataset& ds, std::size_t count) {
    std::vector<Tensor> out;
    const std::size_t n = count == 0 ? ds.size() : std::min(count, ds.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(ds.samples[i].x);
    return out;
}

std::vector<double> distance_values(const std::vector<DistanceEstimate>& ests) {
    std::vector<double> v;
    v.reserve(ests.size());
    for (const auto& e : ests) v.push_back(e.value);
    return v;
}

Sided parse_sided(const std::string& s) {
    return s == "upper" ? Sided::upper : Sided::two;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MDTD: multi-domain Trojan input detector toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value config file (dotted section keys)");

    std::uint64_t seed = 0;

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic blob dataset");
    std::string gd_shape = "1x8x8";
    std::size_t gd_classes = 2, gd_per_class = 200, gd_test_per_class = 100;
    double gd_noise = 0.08;
    std::string gd_train_out, gd_test_out;
    gen->add_option("--shape", gd_shape, "tensor shape, e.g. 1x8x8");
    gen->add_option("--classes", gd_classes)->check(CLI::Range(std::size_t(2), std::size_t(64)));
    gen->add_option("--per-class", gd_per_class);
    gen->add_option("--test-per-class", gd_test_per_class);
    gen->add_option("--noise", gd_noise);
    gen->add_option("--seed", seed)->envname("MDTD_SEED");
    gen->add_option("--train-out", gd_train_out)->required();
    gen->add_option("--test-out", gd_test_out);

    // ---- train / poison-train ----
    auto* tr = app.add_subcommand("train", "train a clean model");
    auto* ptr_cmd = app.add_subcommand("poison-train", "poison the data, then train");
    std::string t_data, t_test, t_model_out, t_metrics_out, t_indices_out;
    TrainFlags train_flags;
    TriggerFlags trig_flags;
    double p_fraction = 0.1, p_truelabel = 0.0;
    for (CLI::App* cmd : {tr, ptr_cmd}) {
        cmd->add_option("--data", t_data)->required();
        cmd->add_option("--test", t_test, "held-out set for metrics");
        cmd->add_option("--model-out", t_model_out)->required();
        cmd->add_option("--metrics-out", t_metrics_out, "metrics JSON path");
        cmd->add_option("--seed", seed)->envname("MDTD_SEED");
        train_flags.attach(cmd);
    }
    trig_flags.attach(ptr_cmd);
    ptr_cmd->add_option("--fraction", p_fraction, "poisoned share of the training set");
    ptr_cmd->add_option("--true-label-prob", p_truelabel,
                        "probability a poisoned sample keeps its label");
    ptr_cmd->add_option("--indices-out", t_indices_out, "poisoned index list path");

    // ---- calibrate ----
    auto* cal_cmd = app.add_subcommand("calibrate", "fit the Stage-2 detector");
    std::string c_model, c_data, c_out, c_dist_out, c_sided = "two";
    std::size_t c_count = 500;
    double c_gamma = 0.05;
    EstimatorFlags cal_est;
    cal_cmd->add_option("--model", c_model)->required();
    cal_cmd->add_option("--data", c_data, "clean dataset")->required();
    cal_cmd->add_option("--count", c_count, "clean samples used (0 = all)");
    cal_cmd->add_option("--gamma", c_gamma, "tolerable false positive rate");
    cal_cmd->add_option("--sided", c_sided)->check(CLI::IsMember({"two", "upper"}));
    cal_cmd->add_option("--out", c_out, "calibration JSON path")->required();
    cal_cmd->add_option("--distances-out", c_dist_out, "distance CSV path");
    cal_cmd->add_option("--seed", seed)->envname("MDTD_SEED");
    cal_est.attach(cal_cmd);

    // ---- detect ----
    auto* det = app.add_subcommand("detect", "score inputs against a calibration");
    std::string d_model, d_cal, d_inputs, d_out;
    EstimatorFlags det_est;
    det->add_option("--model", d_model)->required();
    det->add_option("--calibration", d_cal)->required();
    det->add_option("--inputs", d_inputs, "MDTS file of inputs")->required();
    det->add_option("--out", d_out, "verdict JSONL path")->required();
    det->add_option("--seed", seed)->envname("MDTD_SEED");
    det_est.attach(det);

    // ---- evaluate ----
    auto* ev = app.add_subcommand("evaluate", "detection metrics from distance CSVs");
    std::string e_cal, e_clean, e_trojan, e_out;
    ev->add_option("--calibration", e_cal)->required();
    ev->add_option("--clean-csv", e_clean)->required();
    ev->add_option("--trojan-csv", e_trojan)->required();
    ev->add_option("--out", e_out)->required();

    // ---- roc ----
    auto* roc = app.add_subcommand("roc", "threshold sweep from distance CSVs");
    std::string r_cal, r_clean, r_trojan, r_out, r_gamma_out;
    double r_alpha_max = 4.0;
    std::size_t r_steps = 81;
    roc->add_option("--calibration", r_cal)->required();
    roc->add_option("--clean-csv", r_clean)->required();
    roc->add_option("--trojan-csv", r_trojan)->required();
    roc->add_option("--alpha-max", r_alpha_max);
    roc->add_option("--steps", r_steps);
    roc->add_option("--out", r_out)->required();
    roc->add_option("--gamma-out", r_gamma_out,
                    "gamma-axis CSV (gaussian-mode calibrations only)");

    // ---- certify ----
    auto* cert = app.add_subcommand("certify", "Monte Carlo certified radii");
    std::string cert_model, cert_data, cert_out, cert_summary;
    std::size_t cert_count = 0, cert_samples = 1000;
    double cert_sigma = 0.25, cert_pcap = 0.0;
    cert->add_option("--model", cert_model)->required();
    cert->add_option("--data", cert_data)->required();
    cert->add_option("--count", cert_count, "samples used (0 = all)");
    cert->add_option("--noise-sigma", cert_sigma);
    cert->add_option("--n-samples", cert_samples, "Monte Carlo draws per input");
    cert->add_option("--p-cap", cert_pcap, "top-class probability cap (0 = default)");
    cert->add_option("--out", cert_out, "radius CSV path")->required();
    cert->add_option("--summary-out", cert_summary, "mean/std JSON path");
    cert->add_option("--seed", seed)->envname("MDTD_SEED");

    // ---- adaptive ----
    auto* ad = app.add_subcommand("adaptive", "adaptive-adversary comparison table");
    std::string a_data, a_test, a_out, a_eps = "", a_probs = "";
    double a_gamma = 0.15;
    EstimatorFlags ad_est;
    TrainFlags ad_train;
    TriggerFlags ad_trig;
    double ad_fraction = 0.1, ad_step = 0.00784;
    std::size_t ad_inner = 5, ad_count = 100;
    ad->add_option("--data", a_data)->required();
    ad->add_option("--test", a_test)->required();
    ad->add_option("--epsilons", a_eps, "adversarial-training budgets, e.g. 0.01,0.1");
    ad->add_option("--true-label-probs", a_probs, "relabel probabilities, e.g. 0.5,0.7");
    ad->add_option("--fraction", ad_fraction);
    ad->add_option("--inner-step-size", ad_step);
    ad->add_option("--inner-steps", ad_inner);
    ad->add_option("--gamma", a_gamma);
    ad->add_option("--count", ad_count, "samples per side for detection metrics");
    ad->add_option("--out", a_out)->required();
    ad->add_option("--seed", seed)->envname("MDTD_SEED");
    ad_est.attach(ad);
    ad_train.attach(ad);
    ad_trig.attach(ad);

    // ---- features ----
    auto* feat = app.add_subcommand("features", "penultimate-feature CSV export");
    std::string f_model, f_data, f_out;
    std::size_t f_count = 0;
    feat->add_option("--model", f_model)->required();
    feat->add_option("--data", f_data)->required();
    feat->add_option("--count", f_count, "samples used (0 = all)");
    feat->add_option("--out", f_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            BlobConfig bc;
            bc.shape = parse_dims(gd_shape, 'x');
            bc.num_classes = gd_classes;
            bc.per_class = gd_per_class;
            bc.noise = gd_noise;
            bc.seed = seed;
            save_dataset(gen_blobs(bc), gd_train_out);
            if (!gd_test_out.empty()) {
                bc.per_class = gd_test_per_class;
                bc.seed = seed + 1;
                save_dataset(gen_blobs(bc), gd_test_out);
            }
        } else if (tr->parsed() || ptr_cmd->parsed()) {
            Dataset ds = load_dataset(t_data);
            const std::size_t classes = dataset_classes(ds);
            Network net = train_flags.fresh(ds.samples.front().x.shape, classes, seed);
            json metrics;
            Dataset train_set = ds;
            if (ptr_cmd->parsed()) {
                PoisonConfig pc;
                pc.fraction = p_fraction;
                pc.true_label_prob = p_truelabel;
                pc.seed = seed;
                PoisonResult pr = poison_dataset(ds, trig_flags.spec(), pc);
                train_set = std::move(pr.dataset);
                if (!t_indices_out.empty()) {
                    std::ostringstream os;
                    for (std::size_t i : pr.poisoned_indices) os << i << '\n';
                    write_file(t_indices_out, os.str());
                }
            }
            TrainResult res = train(net, train_set, train_flags.config(seed));
            save_model(res.net, t_model_out);
            metrics["final_loss"] = res.loss_history.back();
            if (!t_test.empty()) {
                Dataset test_set = load_dataset(t_test);
                metrics["acc"] = accuracy(res.net, test_set);
                if (ptr_cmd->parsed())
                    metrics["asr"] = attack_success_rate(res.net, test_set, trig_flags.spec());
            }
            if (!t_metrics_out.empty()) write_file(t_metrics_out, metrics.dump(2) + "\n");
        } else if (cal_cmd->parsed()) {
            Network net = load_model(c_model);
            Dataset ds = load_dataset(c_data);
            cal_est.seed = seed;
            auto ests = distance_batch(net, cal_est.access(), take_inputs(ds, c_count),
                                       cal_est.config());
            if (!c_dist_out.empty()) write_file(c_dist_out, distances_csv(ests));
            Calibration cal = calibrate(distance_values(ests), c_gamma, parse_sided(c_sided));
            write_file(c_out, to_json(cal) + "\n");
        } else if (det->parsed()) {
            Network net = load_model(d_model);
            Calibration cal = calibration_from_json(read_file(d_cal));
            Dataset inputs = load_dataset(d_inputs);
            std::ostringstream os;
            if (!inputs.empty()) {
                det_est.seed = seed;
                auto ests = distance_batch(net, det_est.access(),
                                           take_inputs(inputs, 0), det_est.config());
                for (std::size_t i = 0; i < ests.size(); ++i) {
                    Verdict v = classify(cal, ests[i].value);
                    json line;
                    line["index"] = i;
                    line["distance"] = v.distance;
                    line["score"] = v.score;
                    line["is_trojan"] = v.is_trojan;
                    os << line.dump() << '\n';
                }
            }
            write_file(d_out, os.str());
        } else if (ev->parsed()) {
            Calibration cal = calibration_from_json(read_file(e_cal));
            EvalReport rep = evaluate(cal, read_distance_csv(e_clean),
                                      read_distance_csv(e_trojan));
            write_file(e_out, report_json(rep) + "\n");
        } else if (roc->parsed()) {
            Calibration cal = calibration_from_json(read_file(r_cal));
            std::vector<double> grid;
            for (std::size_t i = 0; i < r_steps; ++i)
                grid.push_back(r_alpha_max * static_cast<double>(i) /
                               static_cast<double>(r_steps - 1));
            RocCurve curve = roc_sweep(read_distance_csv(r_clean),
                                       read_distance_csv(r_trojan), cal.mu, cal.sigma,
                                       grid, cal.sided);
            write_file(r_out, roc_csv(curve));
            if (!r_gamma_out.empty()) {
                if (cal.mode != ThresholdMode::gaussian)
                    throw std::runtime_error(
                        "gamma-axis export requires a gaussian-mode calibration");
                std::ostringstream os;
                os << "gamma,tpr,fpr\n";
                os.precision(17);
                for (const RocPoint& p : curve.points)
                    os << mdtd::erfc(p.alpha / std::sqrt(2.0)) << ',' << p.tpr << ',' << p.fpr
                       << '\n';
                write_file(r_gamma_out, os.str());
            }
        } else if (cert->parsed()) {
            Network net = load_model(cert_model);
            Dataset ds = load_dataset(cert_data);
            CertifyConfig cc;
            cc.noise_sigma = cert_sigma;
            cc.n_samples = cert_samples;
            cc.p_cap = cert_pcap;
            cc.seed = seed;
            auto inputs = take_inputs(ds, cert_count);
            auto radii = radius_batch(net, inputs, cc);
            write_file(cert_out, radii_csv(radii));
            if (!cert_summary.empty()) {
                auto [mean, sd] = mean_radius(net, inputs, cc);
                json j;
                j["mean_radius"] = mean;
                j["std_radius"] = sd;
                j["count"] = inputs.size();
                write_file(cert_summary, j.dump(2) + "\n");
            }
        } else if (ad->parsed()) {
            Dataset train_set = load_dataset(a_data);
            Dataset test_set = load_dataset(a_test);
            const std::size_t classes = dataset_classes(train_set);
            const TriggerSpec spec = ad_trig.spec();
            ad_est.seed = seed;

            auto detection_f1 = [&](const Network& model) {
                std::vector<Tensor> clean_in, trig_in;
                const std::size_t n = std::min(ad_count, test_set.size());
                for (std::size_t i = 0; i < n; ++i) {
                    clean_in.push_back(test_set.samples[i].x);
                    trig_in.push_back(embed_trigger(test_set.samples[i].x, spec));
                }
                auto clean_d = distance_values(
                    distance_batch(model, ad_est.access(), clean_in, ad_est.config()));
                auto trig_d = distance_values(
                    distance_batch(model, ad_est.access(), trig_in, ad_est.config()));
                Calibration cal = calibrate(clean_d, a_gamma);
                return evaluate(cal, clean_d, trig_d).f1;
            };

            json table = json::array();
            PoisonConfig pc;
            pc.fraction = ad_fraction;
            pc.seed = seed;
            for (double eps : parse_doubles(a_eps)) {
                PoisonResult pr = poison_dataset(train_set, spec, pc);
                Network net = ad_train.fresh(train_set.samples.front().x.shape, classes, seed);
                RobustTrainConfig rc;
                rc.base = ad_train.config(seed);
                rc.epsilon = eps;
                rc.step_size = ad_step;
                rc.inner_steps = ad_inner;
                Network model = adversarial_train(net, pr.dataset, rc).net;
                json row;
                row["setting"] = "epsilon";
                row["value"] = eps;
                row["acc"] = accuracy(model, test_set);
                row["asr"] = attack_success_rate(model, test_set, spec);
                row["f1"] = detection_f1(model);
                table.push_back(row);
            }
            for (double p : parse_doubles(a_probs)) {
                PoisonConfig pcp = pc;
                pcp.true_label_prob = p;
                PoisonResult pr = poison_dataset(train_set, spec, pcp);
                Network net = ad_train.fresh(train_set.samples.front().x.shape, classes, seed);
                Network model = train(net, pr.dataset, ad_train.config(seed)).net;
                json row;
                row["setting"] = "true_label_prob";
                row["value"] = p;
                row["acc"] = accuracy(model, test_set);
                row["asr"] = attack_success_rate(model, test_set, spec);
                row["f1"] = detection_f1(model);
                table.push_back(row);
            }
            write_file(a_out, table.dump(2) + "\n");
        } else if (feat->parsed()) {
            Network net = load_model(f_model);
            Dataset ds = load_dataset(f_data);
            const std::size_t n = f_count == 0 ? ds.size() : std::min(f_count, ds.size());
            std::ostringstream os;
            os.precision(17);
            os << "sample_index,label,features...\n";
            for (std::size_t i = 0; i < n; ++i) {
                Tensor f = penultimate_features(net, ds.samples[i].x);
                os << i << ',' << ds.samples[i].label;
                for (double v : f.data) os << ',' << v;
                os << '\n';
            }
            write_file(f_out, os.str());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
