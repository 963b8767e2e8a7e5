#pragma once

#include <cstdint>
#include <vector>

#include "mdtd/net.hpp"

namespace mdtd {

enum class TriggerKind { patch, blend };

// A backdoor trigger: a pattern placed at mask_origin inside the input. A
// patch replaces the covered region; a blend mixes it in with weight alpha.
// For 1-D inputs mask_origin is the window start [i, i+w).
struct TriggerSpec {
    TriggerKind kind = TriggerKind::patch;
    Tensor pattern;
    std::vector<std::size_t> mask_origin;
    double alpha = 1.0;  // blend weight; patch acts as alpha=1 inside the mask
    std::size_t target_class = 0;

    void validate_for(const std::vector<std::size_t>& input_shape) const;
};

struct PoisonConfig {
    double fraction = 0.1;
    double true_label_prob = 0.0;  // probability a poisoned sample keeps its label
    std::uint64_t seed = 0;
};

struct RobustTrainConfig {
    TrainConfig base;
    double epsilon = 0.0;  // L-inf adversarial budget
    double step_size = 0.00784;
    std::size_t inner_steps = 5;
};

struct PoisonResult {
    Dataset dataset;
    std::vector<std::size_t> poisoned_indices;
};

// Embeds the trigger; affected region clamped to [0,1], coordinates outside
// the mask are untouched bit for bit.
Tensor embed_trigger(const Tensor& x, const TriggerSpec& spec);

PoisonResult poison_dataset(const Dataset& ds, const TriggerSpec& spec,
                            const PoisonConfig& cfg);

// Fraction of triggered samples classified as the target class, excluding
// samples whose true label already equals the target.
double attack_success_rate(const Network& net, const Dataset& test,
                           const TriggerSpec& spec);

// Training where each batch sample is replaced by its IFGSM inner
// maximization within the L-inf budget before the gradient step.
TrainResult adversarial_train(const Network& net, const Dataset& ds,
                              const RobustTrainConfig& cfg);

}  // namespace mdtd
