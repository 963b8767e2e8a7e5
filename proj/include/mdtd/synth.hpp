#pragma once

#include <cstdint>

#include "mdtd/net.hpp"

namespace mdtd {

// Synthetic separable data: one random blob center per class in [0.25,0.75]^D,
// samples are the center plus Gaussian noise, clamped to [0,1].
struct BlobConfig {
    std::vector<std::size_t> shape = {16};
    std::size_t num_classes = 2;
    std::size_t per_class = 200;
    double noise = 0.08;
    std::uint64_t seed = 0;
};

Dataset gen_blobs(const BlobConfig& cfg);

}  // namespace mdtd
