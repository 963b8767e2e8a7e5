#include "mdtd/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace mdtd {

namespace {

constexpr std::uint8_t kDense = 1;
constexpr std::uint8_t kConv2d = 2;
constexpr std::uint8_t kRelu = 3;
constexpr std::uint8_t kMaxPool2d = 4;
constexpr std::uint8_t kFlatten = 5;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, double v) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(f));
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
}

double get_f32(std::istream& is) {
    std::uint32_t bits = get_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

void put_f32s(std::ostream& os, const std::vector<double>& v) {
    for (double x : v) put_f32(os, x);
}

void get_f32s(std::istream& is, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = get_f32(is);
}

}  // namespace

void save_model(const Network& net, const std::string& path) {
    validate(net);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write("MDTD", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(net.layers.size()));

    std::vector<std::size_t> shape = net.input_shape;
    for (const Layer& layer : net.layers) {
        if (const auto* d = std::get_if<Dense>(&layer)) {
            os.put(static_cast<char>(kDense));
            put_u32(os, static_cast<std::uint32_t>(d->in));
            put_u32(os, static_cast<std::uint32_t>(d->out));
            put_f32s(os, d->weight);
            put_f32s(os, d->bias);
        } else if (const auto* c = std::get_if<Conv2d>(&layer)) {
            os.put(static_cast<char>(kConv2d));
            put_u32(os, static_cast<std::uint32_t>(c->in_ch));
            put_u32(os, static_cast<std::uint32_t>(shape[1]));
            put_u32(os, static_cast<std::uint32_t>(shape[2]));
            put_u32(os, static_cast<std::uint32_t>(c->out_ch));
            put_u32(os, static_cast<std::uint32_t>(c->kh));
            put_u32(os, static_cast<std::uint32_t>(c->kw));
            put_u32(os, static_cast<std::uint32_t>(c->stride));
            put_f32s(os, c->kernel);
            put_f32s(os, c->bias);
        } else if (std::holds_alternative<Relu>(layer)) {
            os.put(static_cast<char>(kRelu));
        } else if (const auto* p = std::get_if<MaxPool2d>(&layer)) {
            os.put(static_cast<char>(kMaxPool2d));
            put_u32(os, static_cast<std::uint32_t>(p->pool));
        } else {
            os.put(static_cast<char>(kFlatten));
        }
        shape = layer_output_shape(layer, shape);
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

Network load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "MDTD")
        throw std::runtime_error("not a model file: " + path);
    if (get_u32(is) != 1) throw std::runtime_error("unsupported model version");
    const std::uint32_t n_layers = get_u32(is);

    Network net;
    for (std::uint32_t li = 0; li < n_layers; ++li) {
        int tag = is.get();
        if (tag == EOF) throw std::runtime_error("truncated file");
        switch (static_cast<std::uint8_t>(tag)) {
            case kDense: {
                Dense d;
                d.in = get_u32(is);
                d.out = get_u32(is);
                get_f32s(is, d.weight, d.in * d.out);
                get_f32s(is, d.bias, d.out);
                if (li == 0) net.input_shape = {d.in};
                net.layers.push_back(std::move(d));
                break;
            }
            case kConv2d: {
                Conv2d c;
                c.in_ch = get_u32(is);
                const std::size_t in_h = get_u32(is);
                const std::size_t in_w = get_u32(is);
                c.out_ch = get_u32(is);
                c.kh = get_u32(is);
                c.kw = get_u32(is);
                c.stride = get_u32(is);
                get_f32s(is, c.kernel, c.out_ch * c.in_ch * c.kh * c.kw);
                get_f32s(is, c.bias, c.out_ch);
                if (li == 0) net.input_shape = {c.in_ch, in_h, in_w};
                net.layers.push_back(std::move(c));
                break;
            }
            case kRelu:
                net.layers.push_back(Relu{});
                break;
            case kMaxPool2d:
                net.layers.push_back(MaxPool2d{get_u32(is)});
                break;
            case kFlatten:
                net.layers.push_back(Flatten{});
                break;
            default:
                throw std::runtime_error("unknown layer tag in model file");
        }
        if (li == 0 && net.input_shape.empty())
            throw std::runtime_error("model file must start with a dense or conv2d layer");
    }

    std::vector<std::size_t> shape = net.input_shape;
    for (const Layer& l : net.layers) shape = layer_output_shape(l, shape);
    net.num_classes = shape_size(shape);
    validate(net);
    return net;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    if (ds.empty()) throw std::invalid_argument("empty dataset");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    const auto& shape = ds.samples.front().x.shape;
    os.write("MDTS", 4);
    put_u32(os, static_cast<std::uint32_t>(ds.size()));
    put_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) put_u32(os, static_cast<std::uint32_t>(d));
    for (const Sample& s : ds.samples) {
        if (s.x.shape != shape)
            throw std::invalid_argument("dataset samples have mixed shapes");
        put_f32s(os, s.x.data);
        put_u32(os, static_cast<std::uint32_t>(s.label));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "MDTS")
        throw std::runtime_error("not a dataset file: " + path);
    const std::uint32_t count = get_u32(is);
    const std::uint32_t rank = get_u32(is);
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) shape[i] = get_u32(is);
    const std::size_t n = shape_size(shape);

    Dataset ds;
    ds.samples.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor x(shape);
        for (std::size_t k = 0; k < n; ++k) x.data[k] = get_f32(is);
        const std::size_t label = get_u32(is);
        ds.samples.push_back({std::move(x), label});
    }
    return ds;
}

}  // namespace mdtd
