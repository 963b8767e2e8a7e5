#include "mdtd/synth.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace mdtd {

Dataset gen_blobs(const BlobConfig& cfg) {
    if (cfg.num_classes < 2) throw std::invalid_argument("gen_blobs: need >= 2 classes");
    if (cfg.per_class == 0) throw std::invalid_argument("gen_blobs: per_class must be >= 1");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> center_u(0.25, 0.75);
    std::normal_distribution<double> noise(0.0, cfg.noise);

    const std::size_t dim = shape_size(cfg.shape);
    std::vector<std::vector<double>> centers(cfg.num_classes, std::vector<double>(dim));
    for (auto& c : centers)
        for (double& v : c) v = center_u(rng);

    Dataset ds;
    ds.samples.reserve(cfg.num_classes * cfg.per_class);
    for (std::size_t cls = 0; cls < cfg.num_classes; ++cls) {
        for (std::size_t k = 0; k < cfg.per_class; ++k) {
            Tensor x(cfg.shape);
            for (std::size_t i = 0; i < dim; ++i)
                x.data[i] = std::clamp(centers[cls][i] + noise(rng), 0.0, 1.0);
            ds.samples.push_back({std::move(x), cls});
        }
    }
    return ds;
}

}  // namespace mdtd
