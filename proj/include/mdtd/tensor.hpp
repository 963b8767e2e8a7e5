#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdtd {

// Dense n-dimensional array of doubles, row-major.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, double fill = 0.0);
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    // Throws if any element is NaN or infinite.
    void check_finite(const std::string& context) const;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);

double linf_norm(const Tensor& a);
double l2_norm(const Tensor& a);
double linf_dist(const Tensor& a, const Tensor& b);
double l2_dist(const Tensor& a, const Tensor& b);

Tensor clamp(const Tensor& x, double lo, double hi);

}  // namespace mdtd
