#include "mdtd/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace mdtd {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_size(shape), fill) {
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("tensor: zero dimension");
    }
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_size(shape) != data.size())
        throw std::invalid_argument("tensor: shape/data size mismatch");
}

void Tensor::check_finite(const std::string& context) const {
    for (double v : data) {
        if (!std::isfinite(v))
            throw std::runtime_error("non-finite value in " + context);
    }
}

double linf_norm(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

double l2_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double linf_dist(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

double l2_dist(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    Tensor out = x;
    for (double& v : out.data) v = std::clamp(v, lo, hi);
    return out;
}

}  // namespace mdtd
