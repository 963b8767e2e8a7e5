#pragma once

// Reference toy pipeline shared by the integration and acceptance tests:
// overlapping 2-class image blobs, a white 7x7 corner patch trigger targeting
// class 1, 10% poison, and a small CNN. Blob noise is deliberately high so
// clean samples sit near the decision boundary while the dominant patch pushes
// triggered samples far from it.

#include "mdtd/backdoor.hpp"
#include "mdtd/net.hpp"
#include "mdtd/synth.hpp"

namespace toy {

inline mdtd::BlobConfig blob_config(std::size_t per_class, std::uint64_t seed) {
    mdtd::BlobConfig bc;
    bc.shape = {1, 8, 8};
    bc.num_classes = 2;
    bc.per_class = per_class;
    bc.noise = 0.35;
    bc.seed = seed;
    return bc;
}

inline mdtd::TriggerSpec trigger() {
    mdtd::TriggerSpec spec;
    spec.kind = mdtd::TriggerKind::patch;
    spec.pattern = mdtd::Tensor({1, 7, 7}, 1.0);
    spec.mask_origin = {0, 0, 0};
    spec.target_class = 1;
    return spec;
}

inline mdtd::TrainConfig train_config(std::uint64_t seed) {
    mdtd::TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.05;
    cfg.momentum = 0.9;
    cfg.seed = seed;
    return cfg;
}

inline mdtd::Network fresh_net(std::uint64_t seed) {
    return mdtd::make_cnn({1, 8, 8}, 16, 2, seed);
}

struct Models {
    mdtd::Network clean;
    mdtd::Network trojaned;
    mdtd::Dataset train_set;
    mdtd::Dataset test_set;
};

// Draw train and test from the same class centers: one generation, split per
// class (gen_blobs emits samples class by class).
inline void split_blobs(const mdtd::BlobConfig& cfg, std::size_t per_class_train,
                        mdtd::Dataset& train_set, mdtd::Dataset& test_set) {
    mdtd::Dataset all = mdtd::gen_blobs(cfg);
    train_set.samples.clear();
    test_set.samples.clear();
    for (std::size_t cls = 0; cls < cfg.num_classes; ++cls) {
        for (std::size_t k = 0; k < cfg.per_class; ++k) {
            const mdtd::Sample& s = all.samples[cls * cfg.per_class + k];
            (k < per_class_train ? train_set : test_set).samples.push_back(s);
        }
    }
}

inline Models build(std::size_t per_class_train = 240, std::size_t per_class_test = 100,
                    std::uint64_t seed = 11) {
    Models m;
    split_blobs(blob_config(per_class_train + per_class_test, seed), per_class_train,
                m.train_set, m.test_set);

    mdtd::Network net = fresh_net(seed);
    m.clean = mdtd::train(net, m.train_set, train_config(seed)).net;

    mdtd::PoisonConfig pc;
    pc.fraction = 0.1;
    pc.seed = seed;
    mdtd::PoisonResult poisoned = mdtd::poison_dataset(m.train_set, trigger(), pc);
    m.trojaned = mdtd::train(net, poisoned.dataset, train_config(seed)).net;
    return m;
}

}  // namespace toy
