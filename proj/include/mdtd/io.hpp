#pragma once

#include <string>

#include "mdtd/net.hpp"

namespace mdtd {

// Model binary: magic "MDTD", u32 version=1, u32 layer count, then per layer
// a u8 kind tag, shape fields as u32, and parameters as little-endian f32
// row-major. The input shape is recovered from the first layer's shape
// fields, so the first layer must be dense or conv2d.
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);

// Dataset binary: magic "MDTS", u32 count, u32 rank, u32 dims..., then per
// sample the f32 payload followed by a u32 label.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace mdtd
