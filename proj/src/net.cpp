#include "mdtd/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mdtd {

namespace {

void check_input(const Network& net, const Tensor& x) {
    if (x.shape != net.input_shape)
        throw std::invalid_argument("input shape does not match network input shape");
}

Tensor dense_forward(const Dense& d, const Tensor& in) {
    Tensor out({d.out});
    for (std::size_t o = 0; o < d.out; ++o) {
        double s = d.bias[o];
        const double* w = &d.weight[o * d.in];
        for (std::size_t i = 0; i < d.in; ++i) s += w[i] * in.data[i];
        out.data[o] = s;
    }
    return out;
}

Tensor conv_forward(const Conv2d& c, const Tensor& in) {
    const std::size_t H = in.shape[1], W = in.shape[2];
    const std::size_t Ho = (H - c.kh) / c.stride + 1;
    const std::size_t Wo = (W - c.kw) / c.stride + 1;
    Tensor out({c.out_ch, Ho, Wo});
    for (std::size_t oc = 0; oc < c.out_ch; ++oc) {
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j) {
                double s = c.bias[oc];
                for (std::size_t ic = 0; ic < c.in_ch; ++ic) {
                    for (std::size_t ki = 0; ki < c.kh; ++ki) {
                        const double* krow =
                            &c.kernel[((oc * c.in_ch + ic) * c.kh + ki) * c.kw];
                        const double* irow =
                            &in.data[(ic * H + i * c.stride + ki) * W + j * c.stride];
                        for (std::size_t kj = 0; kj < c.kw; ++kj) s += krow[kj] * irow[kj];
                    }
                }
                out.data[(oc * Ho + i) * Wo + j] = s;
            }
        }
    }
    return out;
}

Tensor pool_forward(const MaxPool2d& p, const Tensor& in) {
    const std::size_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
    const std::size_t Ho = H / p.pool, Wo = W / p.pool;
    Tensor out({C, Ho, Wo});
    for (std::size_t ch = 0; ch < C; ++ch) {
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j) {
                double m = -1e300;
                for (std::size_t di = 0; di < p.pool; ++di)
                    for (std::size_t dj = 0; dj < p.pool; ++dj)
                        m = std::max(m, in.data[(ch * H + i * p.pool + di) * W +
                                                j * p.pool + dj]);
                out.data[(ch * Ho + i) * Wo + j] = m;
            }
        }
    }
    return out;
}

Tensor layer_forward(const Layer& layer, const Tensor& in) {
    return std::visit(
        [&](const auto& l) -> Tensor {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Dense>) {
                return dense_forward(l, in);
            } else if constexpr (std::is_same_v<T, Conv2d>) {
                return conv_forward(l, in);
            } else if constexpr (std::is_same_v<T, Relu>) {
                Tensor out = in;
                for (double& v : out.data) v = std::max(v, 0.0);
                return out;
            } else if constexpr (std::is_same_v<T, MaxPool2d>) {
                return pool_forward(l, in);
            } else {
                Tensor out = in;
                out.shape = {in.size()};
                return out;
            }
        },
        layer);
}

// Activations: acts[0] = x, acts[i+1] = layer_i(acts[i]).
std::vector<Tensor> forward_trace(const Network& net, const Tensor& x) {
    std::vector<Tensor> acts;
    acts.reserve(net.layers.size() + 1);
    acts.push_back(x);
    for (const Layer& l : net.layers) acts.push_back(layer_forward(l, acts.back()));
    return acts;
}

// Backpropagates grad w.r.t. layer output into grad w.r.t. layer input;
// accumulates parameter gradients into pg when non-null.
Tensor layer_backward(const Layer& layer, const Tensor& in, const Tensor& gout,
                      LayerGrad* pg) {
    return std::visit(
        [&](const auto& l) -> Tensor {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Dense>) {
                Tensor gin(in.shape, 0.0);
                for (std::size_t o = 0; o < l.out; ++o) {
                    const double g = gout.data[o];
                    const double* w = &l.weight[o * l.in];
                    for (std::size_t i = 0; i < l.in; ++i) gin.data[i] += g * w[i];
                    if (pg) {
                        double* gw = &pg->weight[o * l.in];
                        for (std::size_t i = 0; i < l.in; ++i) gw[i] += g * in.data[i];
                        pg->bias[o] += g;
                    }
                }
                return gin;
            } else if constexpr (std::is_same_v<T, Conv2d>) {
                const std::size_t H = in.shape[1], W = in.shape[2];
                const std::size_t Ho = gout.shape[1], Wo = gout.shape[2];
                Tensor gin(in.shape, 0.0);
                for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
                    for (std::size_t i = 0; i < Ho; ++i) {
                        for (std::size_t j = 0; j < Wo; ++j) {
                            const double g = gout.data[(oc * Ho + i) * Wo + j];
                            if (pg) pg->bias[oc] += g;
                            for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
                                for (std::size_t ki = 0; ki < l.kh; ++ki) {
                                    const std::size_t kbase =
                                        ((oc * l.in_ch + ic) * l.kh + ki) * l.kw;
                                    const std::size_t ibase =
                                        (ic * H + i * l.stride + ki) * W + j * l.stride;
                                    for (std::size_t kj = 0; kj < l.kw; ++kj) {
                                        gin.data[ibase + kj] += g * l.kernel[kbase + kj];
                                        if (pg)
                                            pg->weight[kbase + kj] +=
                                                g * in.data[ibase + kj];
                                    }
                                }
                            }
                        }
                    }
                }
                return gin;
            } else if constexpr (std::is_same_v<T, Relu>) {
                Tensor gin = gout;
                for (std::size_t i = 0; i < gin.size(); ++i)
                    if (in.data[i] <= 0.0) gin.data[i] = 0.0;
                return gin;
            } else if constexpr (std::is_same_v<T, MaxPool2d>) {
                const std::size_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
                const std::size_t Ho = H / l.pool, Wo = W / l.pool;
                Tensor gin(in.shape, 0.0);
                for (std::size_t ch = 0; ch < C; ++ch) {
                    for (std::size_t i = 0; i < Ho; ++i) {
                        for (std::size_t j = 0; j < Wo; ++j) {
                            std::size_t best = 0;
                            double m = -1e300;
                            for (std::size_t di = 0; di < l.pool; ++di)
                                for (std::size_t dj = 0; dj < l.pool; ++dj) {
                                    const std::size_t idx =
                                        (ch * H + i * l.pool + di) * W + j * l.pool + dj;
                                    if (in.data[idx] > m) {
                                        m = in.data[idx];
                                        best = idx;
                                    }
                                }
                            gin.data[best] += gout.data[(ch * Ho + i) * Wo + j];
                        }
                    }
                }
                return gin;
            } else {
                Tensor gin = gout;
                gin.shape = in.shape;
                return gin;
            }
        },
        layer);
}

std::vector<double> logit_grad(const std::vector<double>& logits, std::size_t y) {
    std::vector<double> g = softmax(logits);
    g[y] -= 1.0;
    return g;
}

// Full backward pass; param gradients accumulated into grads when non-null.
Tensor backward(const Network& net, const std::vector<Tensor>& acts, std::size_t y,
                Gradients* grads) {
    Tensor g(acts.back().shape, logit_grad(acts.back().data, y));
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        LayerGrad* pg = grads ? &grads->layers[li] : nullptr;
        g = layer_backward(net.layers[li], acts[li], g, pg);
    }
    return g;
}

Gradients zero_grads(const Network& net) {
    Gradients g;
    g.layers.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (const auto* d = std::get_if<Dense>(&net.layers[i])) {
            g.layers[i].weight.assign(d->weight.size(), 0.0);
            g.layers[i].bias.assign(d->bias.size(), 0.0);
        } else if (const auto* c = std::get_if<Conv2d>(&net.layers[i])) {
            g.layers[i].weight.assign(c->kernel.size(), 0.0);
            g.layers[i].bias.assign(c->bias.size(), 0.0);
        }
    }
    return g;
}

double init_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

std::vector<std::size_t> layer_output_shape(const Layer& layer,
                                            const std::vector<std::size_t>& in_shape) {
    return std::visit(
        [&](const auto& l) -> std::vector<std::size_t> {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Dense>) {
                if (shape_size(in_shape) != l.in)
                    throw std::invalid_argument("dense layer input size mismatch");
                if (in_shape.size() != 1)
                    throw std::invalid_argument("dense layer expects rank-1 input");
                return {l.out};
            } else if constexpr (std::is_same_v<T, Conv2d>) {
                if (in_shape.size() != 3 || in_shape[0] != l.in_ch)
                    throw std::invalid_argument("conv2d input shape mismatch");
                if (in_shape[1] < l.kh || in_shape[2] < l.kw)
                    throw std::invalid_argument("conv2d kernel larger than input");
                return {l.out_ch, (in_shape[1] - l.kh) / l.stride + 1,
                        (in_shape[2] - l.kw) / l.stride + 1};
            } else if constexpr (std::is_same_v<T, MaxPool2d>) {
                if (in_shape.size() != 3 || in_shape[1] < l.pool || in_shape[2] < l.pool)
                    throw std::invalid_argument("maxpool2d input shape mismatch");
                return {in_shape[0], in_shape[1] / l.pool, in_shape[2] / l.pool};
            } else if constexpr (std::is_same_v<T, Flatten>) {
                return {shape_size(in_shape)};
            } else {
                return in_shape;
            }
        },
        layer);
}

void validate(const Network& net) {
    if (net.layers.empty()) throw std::invalid_argument("network has no layers");
    std::vector<std::size_t> shape = net.input_shape;
    for (const Layer& l : net.layers) shape = layer_output_shape(l, shape);
    if (shape_size(shape) != net.num_classes || net.num_classes < 2)
        throw std::invalid_argument("network output does not match num_classes");
}

Tensor forward(const Network& net, const Tensor& x) {
    check_input(net, x);
    Tensor out = x;
    for (const Layer& l : net.layers) out = layer_forward(l, out);
    out.check_finite("forward");
    return out;
}

std::size_t predict(const Network& net, const Tensor& x) {
    Tensor logits = forward(net, x);
    // ties broken by lowest index
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits.data[i] > logits.data[best]) best = i;
    return best;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

double loss(const Network& net, const Tensor& x, std::size_t y) {
    if (y >= net.num_classes) throw std::invalid_argument("label out of range");
    Tensor logits = forward(net, x);
    double m = *std::max_element(logits.data.begin(), logits.data.end());
    double z = 0.0;
    for (double v : logits.data) z += std::exp(v - m);
    return std::log(z) - (logits.data[y] - m);
}

Tensor grad_input(const Network& net, const Tensor& x, std::size_t y) {
    if (y >= net.num_classes) throw std::invalid_argument("label out of range");
    check_input(net, x);
    auto acts = forward_trace(net, x);
    Tensor g = backward(net, acts, y, nullptr);
    g.check_finite("grad_input");
    return g;
}

Gradients grad_params(const Network& net, const std::vector<Sample>& batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    Gradients grads = zero_grads(net);
    for (const Sample& s : batch) {
        if (s.label >= net.num_classes) throw std::invalid_argument("label out of range");
        check_input(net, s.x);
        auto acts = forward_trace(net, s.x);
        backward(net, acts, s.label, &grads);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (LayerGrad& lg : grads.layers) {
        for (double& v : lg.weight) v *= inv;
        for (double& v : lg.bias) v *= inv;
    }
    return grads;
}

Tensor penultimate_features(const Network& net, const Tensor& x) {
    if (net.layers.size() < 2)
        throw std::invalid_argument("penultimate features require >= 2 layers");
    check_input(net, x);
    Tensor out = x;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i)
        out = layer_forward(net.layers[i], out);
    return out;
}

TrainResult train(const Network& net, const Dataset& ds, const TrainConfig& cfg,
                  const SamplePerturb& perturb) {
    if (ds.empty()) throw std::invalid_argument("empty dataset");
    if (cfg.learning_rate < 0.0) throw std::invalid_argument("negative learning rate");
    if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    validate(net);

    TrainResult result{net, {}};
    Network& model = result.net;
    Gradients velocity = zero_grads(model);
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            std::vector<Sample> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const Sample& s = ds.samples[order[k]];
                Tensor x = perturb ? perturb(model, s.x, s.label) : s.x;
                batch.push_back({std::move(x), s.label});
            }
            for (const Sample& s : batch) epoch_loss += loss(model, s.x, s.label);
            Gradients g = grad_params(model, batch);
            for (std::size_t li = 0; li < model.layers.size(); ++li) {
                auto step = [&](std::vector<double>& param, std::vector<double>& vel,
                                const std::vector<double>& grad) {
                    for (std::size_t i = 0; i < param.size(); ++i) {
                        vel[i] = cfg.momentum * vel[i] - cfg.learning_rate * grad[i];
                        param[i] += vel[i];
                    }
                };
                if (auto* d = std::get_if<Dense>(&model.layers[li])) {
                    step(d->weight, velocity.layers[li].weight, g.layers[li].weight);
                    step(d->bias, velocity.layers[li].bias, g.layers[li].bias);
                } else if (auto* c = std::get_if<Conv2d>(&model.layers[li])) {
                    step(c->kernel, velocity.layers[li].weight, g.layers[li].weight);
                    step(c->bias, velocity.layers[li].bias, g.layers[li].bias);
                }
            }
        }
        epoch_loss /= static_cast<double>(ds.size());
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("training diverged at epoch " +
                                     std::to_string(epoch));
        result.loss_history.push_back(epoch_loss);
    }
    return result;
}

Network make_mlp(const std::vector<std::size_t>& input_shape,
                 const std::vector<std::size_t>& hidden, std::size_t num_classes,
                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Network net;
    net.input_shape = input_shape;
    net.num_classes = num_classes;
    std::size_t in = shape_size(input_shape);
    if (input_shape.size() != 1) net.layers.push_back(Flatten{});
    std::vector<std::size_t> widths = hidden;
    widths.push_back(num_classes);
    for (std::size_t k = 0; k < widths.size(); ++k) {
        Dense d;
        d.in = in;
        d.out = widths[k];
        const double bound = init_bound(d.in, d.out);
        std::uniform_real_distribution<double> u(-bound, bound);
        d.weight.resize(d.in * d.out);
        for (double& w : d.weight) w = u(rng);
        d.bias.assign(d.out, 0.0);
        net.layers.push_back(std::move(d));
        if (k + 1 < widths.size()) net.layers.push_back(Relu{});
        in = widths[k];
    }
    validate(net);
    return net;
}

Network make_cnn(const std::vector<std::size_t>& input_shape, std::size_t filters,
                 std::size_t num_classes, std::uint64_t seed) {
    if (input_shape.size() != 3)
        throw std::invalid_argument("cnn expects a (channels, height, width) input");
    std::mt19937_64 rng(seed);
    Network net;
    net.input_shape = input_shape;
    net.num_classes = num_classes;

    Conv2d c;
    c.in_ch = input_shape[0];
    c.out_ch = filters;
    c.kh = c.kw = 3;
    c.stride = 1;
    const double cb = init_bound(c.in_ch * 9, c.out_ch * 9);
    std::uniform_real_distribution<double> uc(-cb, cb);
    c.kernel.resize(c.out_ch * c.in_ch * 9);
    for (double& w : c.kernel) w = uc(rng);
    c.bias.assign(c.out_ch, 0.0);
    net.layers.push_back(std::move(c));
    net.layers.push_back(Relu{});
    net.layers.push_back(MaxPool2d{2});

    std::vector<std::size_t> shape = input_shape;
    for (const Layer& l : net.layers) shape = layer_output_shape(l, shape);
    net.layers.push_back(Flatten{});

    Dense d;
    d.in = shape_size(shape);
    d.out = num_classes;
    const double db = init_bound(d.in, d.out);
    std::uniform_real_distribution<double> ud(-db, db);
    d.weight.resize(d.in * d.out);
    for (double& w : d.weight) w = ud(rng);
    d.bias.assign(d.out, 0.0);
    net.layers.push_back(std::move(d));
    validate(net);
    return net;
}

}  // namespace mdtd
