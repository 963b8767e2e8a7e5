#include "mdtd/backdoor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mdtd {

namespace {

// Visits every flat index of x covered by the pattern region.
template <typename Fn>
void for_region(const Tensor& x, const TriggerSpec& spec, Fn&& fn) {
    const auto& pshape = spec.pattern.shape;
    std::vector<std::size_t> idx(pshape.size(), 0);
    const std::size_t n = spec.pattern.size();
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t flat = 0;
        for (std::size_t d = 0; d < pshape.size(); ++d)
            flat = flat * x.shape[d] + (spec.mask_origin[d] + idx[d]);
        fn(flat, p);
        for (std::size_t d = pshape.size(); d-- > 0;) {
            if (++idx[d] < pshape[d]) break;
            idx[d] = 0;
        }
    }
}

}  // namespace

void TriggerSpec::validate_for(const std::vector<std::size_t>& input_shape) const {
    if (pattern.rank() != input_shape.size())
        throw std::invalid_argument("trigger pattern rank does not match input rank");
    if (mask_origin.size() != input_shape.size())
        throw std::invalid_argument("trigger origin rank does not match input rank");
    for (std::size_t d = 0; d < input_shape.size(); ++d) {
        if (mask_origin[d] + pattern.shape[d] > input_shape[d])
            throw std::invalid_argument("trigger pattern out of bounds");
    }
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("blend alpha must be in [0,1]");
}

Tensor embed_trigger(const Tensor& x, const TriggerSpec& spec) {
    spec.validate_for(x.shape);
    Tensor out = x;
    if (spec.kind == TriggerKind::patch) {
        for_region(x, spec, [&](std::size_t flat, std::size_t p) {
            out.data[flat] = std::clamp(spec.pattern.data[p], 0.0, 1.0);
        });
    } else {
        for_region(x, spec, [&](std::size_t flat, std::size_t p) {
            double v = (1.0 - spec.alpha) * x.data[flat] + spec.alpha * spec.pattern.data[p];
            out.data[flat] = std::clamp(v, 0.0, 1.0);
        });
    }
    return out;
}

PoisonResult poison_dataset(const Dataset& ds, const TriggerSpec& spec,
                            const PoisonConfig& cfg) {
    if (cfg.fraction < 0.0 || cfg.fraction > 1.0)
        throw std::invalid_argument("poison fraction must be in [0,1]");
    if (cfg.true_label_prob < 0.0 || cfg.true_label_prob > 1.0)
        throw std::invalid_argument("true_label_prob must be in [0,1]");

    const std::size_t k =
        static_cast<std::size_t>(std::floor(cfg.fraction * static_cast<double>(ds.size())));
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(k);
    std::sort(order.begin(), order.end());

    PoisonResult res;
    res.dataset = ds;
    res.poisoned_indices = order;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i : order) {
        Sample& s = res.dataset.samples[i];
        s.x = embed_trigger(s.x, spec);
        if (!(u(rng) < cfg.true_label_prob)) s.label = spec.target_class;
    }
    return res;
}

double attack_success_rate(const Network& net, const Dataset& test,
                           const TriggerSpec& spec) {
    std::size_t hits = 0, total = 0;
    for (const Sample& s : test.samples) {
        if (s.label == spec.target_class) continue;
        ++total;
        if (predict(net, embed_trigger(s.x, spec)) == spec.target_class) ++hits;
    }
    if (total == 0)
        throw std::invalid_argument("no test samples outside the target class");
    return static_cast<double>(hits) / static_cast<double>(total);
}

TrainResult adversarial_train(const Network& net, const Dataset& ds,
                              const RobustTrainConfig& cfg) {
    if (cfg.epsilon < 0.0) throw std::invalid_argument("epsilon must be >= 0");
    if (cfg.step_size <= 0.0) throw std::invalid_argument("step_size must be > 0");
    if (cfg.inner_steps == 0) throw std::invalid_argument("inner_steps must be >= 1");

    SamplePerturb perturb = [&cfg](const Network& model, const Tensor& x,
                                   std::size_t label) {
        Tensor adv = x;
        for (std::size_t step = 0; step < cfg.inner_steps; ++step) {
            Tensor g = grad_input(model, adv, label);
            for (std::size_t i = 0; i < adv.size(); ++i) {
                double v = adv.data[i] + cfg.step_size * (g.data[i] > 0.0   ? 1.0
                                                          : g.data[i] < 0.0 ? -1.0
                                                                            : 0.0);
                v = std::clamp(v, x.data[i] - cfg.epsilon, x.data[i] + cfg.epsilon);
                adv.data[i] = std::clamp(v, 0.0, 1.0);
            }
        }
        return adv;
    };
    return train(net, ds, cfg.base, perturb);
}

}  // namespace mdtd
