#include <doctest.h>

#include <cmath>

#include "mdtd/boundary.hpp"
#include "mdtd/calibrate.hpp"
#include "mdtd/certify.hpp"
#include "mdtd/evalkit.hpp"
#include "toy_pipeline.hpp"

using namespace mdtd;

namespace {

std::vector<double> values(const std::vector<DistanceEstimate>& ests) {
    std::vector<double> v;
    v.reserve(ests.size());
    for (const auto& e : ests) v.push_back(e.value);
    return v;
}

}  // namespace

TEST_CASE("toy backdoor pipeline: utility, attack, and boundary separation") {
    toy::Models m = toy::build();
    const TriggerSpec spec = toy::trigger();

    const double clean_acc = accuracy(m.clean, m.test_set);
    const double troj_acc = accuracy(m.trojaned, m.test_set);
    CHECK(clean_acc >= 0.85);
    CHECK(troj_acc >= 0.9 * clean_acc);

    const double asr = attack_success_rate(m.trojaned, m.test_set, spec);
    CHECK(asr >= 0.9);

    // penultimate features move when the trigger lands on a Trojaned model
    const Tensor& x0 = m.test_set.samples.front().x;
    Tensor f_clean = penultimate_features(m.trojaned, x0);
    Tensor f_trig = penultimate_features(m.trojaned, embed_trigger(x0, spec));
    CHECK(l2_dist(f_clean, f_trig) > 0.0);

    // Stage 1: triggered samples sit farther from the boundary
    std::vector<Tensor> clean_inputs, trig_inputs;
    for (const Sample& s : m.test_set.samples) {
        clean_inputs.push_back(s.x);
        trig_inputs.push_back(embed_trigger(s.x, spec));
    }
    IfgsmConfig ic;
    ic.step_size = 0.005;
    ic.max_steps = 400;
    EstimatorConfig cfg = ic;
    auto clean_d = values(distance_batch(m.trojaned, OracleAccess::gradient, clean_inputs, cfg));
    auto trig_d = values(distance_batch(m.trojaned, OracleAccess::gradient, trig_inputs, cfg));
    CHECK(welch_p_greater(trig_d, clean_d) < 0.01);

    // Stage 2: calibrate on clean distances, detect the triggered ones
    Calibration cal = calibrate(clean_d, 0.15);
    EvalReport rep = evaluate(cal, clean_d, trig_d);
    CHECK(rep.tpr > 0.5);
    CHECK(rep.fpr <= 0.35);

    // certified-radius heuristic points the same way (mixed-class subsample)
    std::vector<Tensor> clean_sub, trig_sub;
    for (std::size_t i = 0; i < clean_inputs.size(); i += 4) {
        clean_sub.push_back(clean_inputs[i]);
        trig_sub.push_back(trig_inputs[i]);
    }
    CertifyConfig cc;
    cc.noise_sigma = 0.25;
    cc.n_samples = 200;
    cc.seed = 3;
    auto [mean_clean, sd_clean] = mean_radius(m.trojaned, clean_sub, cc);
    auto [mean_trig, sd_trig] = mean_radius(m.trojaned, trig_sub, cc);
    CHECK(mean_trig > mean_clean);
    (void)sd_clean;
    (void)sd_trig;
}

TEST_CASE("adaptive adversary trends at toy scale") {
    Dataset train_set, test_set;
    toy::split_blobs(toy::blob_config(90, 11), 60, train_set, test_set);

    RobustTrainConfig rc;
    rc.base = toy::train_config(11);
    rc.base.epochs = 20;
    rc.step_size = 0.00784;

    Network net = toy::fresh_net(11);
    rc.epsilon = 0.01;
    rc.inner_steps = static_cast<std::size_t>(std::ceil(rc.epsilon / rc.step_size)) + 1;
    const double acc_small = accuracy(adversarial_train(net, train_set, rc).net, test_set);
    rc.epsilon = 0.1;
    rc.inner_steps = static_cast<std::size_t>(std::ceil(rc.epsilon / rc.step_size)) + 1;
    const double acc_large = accuracy(adversarial_train(net, train_set, rc).net, test_set);
    CHECK(acc_large <= acc_small);
}
