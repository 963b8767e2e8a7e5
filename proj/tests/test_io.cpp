#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "mdtd/io.hpp"
#include "mdtd/synth.hpp"

using namespace mdtd;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("model file round trip (mlp and cnn)") {
    for (int which = 0; which < 2; ++which) {
        Network net = which == 0 ? make_mlp({6}, {5}, 3, 4) : make_cnn({1, 8, 8}, 4, 2, 4);
        const std::string path = tmp_path("mdtd_model_rt.bin");
        save_model(net, path);
        Network back = load_model(path);
        CHECK(back.input_shape == net.input_shape);
        CHECK(back.num_classes == net.num_classes);
        CHECK(back.layers.size() == net.layers.size());
        // parameters survive the f32 round trip to f32 precision
        std::mt19937_64 rng(0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Tensor x(net.input_shape);
        for (double& v : x.data) v = u(rng);
        Tensor a = forward(net, x);
        Tensor b = forward(back, x);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-4));
        std::remove(path.c_str());
    }
}

TEST_CASE("model file rejects wrong magic") {
    const std::string path = tmp_path("mdtd_bad_magic.bin");
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPE1234";
    }
    CHECK_THROWS(load_model(path));
    std::remove(path.c_str());
}

TEST_CASE("dataset file round trip") {
    BlobConfig cfg;
    cfg.shape = {2, 4, 4};
    cfg.per_class = 5;
    cfg.seed = 11;
    Dataset ds = gen_blobs(cfg);
    const std::string path = tmp_path("mdtd_ds_rt.bin");
    save_dataset(ds, path);
    Dataset back = load_dataset(path);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.samples[i].label == ds.samples[i].label);
        CHECK(back.samples[i].x.shape == ds.samples[i].x.shape);
        for (std::size_t k = 0; k < ds.samples[i].x.size(); ++k)
            CHECK(back.samples[i].x.data[k] ==
                  doctest::Approx(ds.samples[i].x.data[k]).epsilon(1e-6));
    }
    std::remove(path.c_str());
}

TEST_CASE("saving twice yields identical bytes") {
    Network net = make_mlp({4}, {3}, 2, 9);
    const std::string p1 = tmp_path("mdtd_det1.bin");
    const std::string p2 = tmp_path("mdtd_det2.bin");
    save_model(net, p1);
    save_model(net, p2);
    std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}
