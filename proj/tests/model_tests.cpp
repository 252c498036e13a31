#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "pinsite/model.hpp"

using namespace pinsite;
using testutil::random_tensor;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.input_size = 32;
    cfg.stem = {{{4, 3, 2}, {8, 3, 2}}};
    cfg.stages = {{{8, 2, 8, 4}, {8, 2, 8, 4}, {8, 2, 8, 4}}};
    cfg.hidden_units = 16;
    cfg.seed = 7;
    return cfg;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("model config validation") {
    ModelConfig cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.stages[1].errc_channels = 6;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.dropout1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.stages[0].cbam_reduction = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("model config key-value round trip") {
    ModelConfig cfg = tiny_config();
    cfg.use_errc = false;
    ModelConfig back = ModelConfig::from_kv(cfg.to_kv());
    CHECK(back.to_kv() == cfg.to_kv());
    CHECK_THROWS_AS(ModelConfig::from_kv("nonsense=1\n"), FormatError);
}

TEST_CASE("identically seeded builds produce identical outputs") {
    ModelConfig cfg = tiny_config();
    PinSiteNet<double> a(cfg), b(cfg);
    a.set_mode(Mode::infer);
    b.set_mode(Mode::infer);
    Rng rng(41);
    Tensor<double> x = random_tensor({2, 3, 32, 32}, rng, 0.5);
    CHECK(a.forward(x).v == b.forward(x).v);

    cfg.seed = 8;
    PinSiteNet<double> c(cfg);
    c.set_mode(Mode::infer);
    CHECK(a.forward(x).v != c.forward(x).v);
}

TEST_CASE("forward produces softmax rows over two classes") {
    PinSiteNet<double> net(tiny_config());
    net.set_mode(Mode::infer);
    Rng rng(42);
    Tensor<double> x = random_tensor({3, 3, 32, 32}, rng, 0.5);
    Tensor<double> y = net.forward(x);
    CHECK(y.dims == std::vector<int>{3, 2});
    for (int i = 0; i < 3; ++i) {
        CHECK(y.v[i * 2] + y.v[i * 2 + 1] == doctest::Approx(1.0));
        CHECK(y.v[i * 2] >= 0.0);
        CHECK(y.v[i * 2 + 1] >= 0.0);
    }
}

TEST_CASE("ablation swaps the errc slot for a stride-1 inverted residual") {
    ModelConfig cfg = tiny_config();
    PinSiteNet<double> with(cfg);
    CHECK(with.default_cam_layer() == "stage3.errc");
    cfg.use_errc = false;
    PinSiteNet<double> without(cfg);
    CHECK(without.default_cam_layer() == "stage3.ir2");
    CHECK_NOTHROW(without.layer_index("stage1.ir2"));
    CHECK_THROWS_AS(without.layer_index("stage1.errc"), ConfigError);
}

TEST_CASE("predict applies the group-b threshold") {
    std::vector<Prediction> out;
    Tensor<double> probs({2, 2}, {0.7, 0.3, 0.2, 0.8});
    // exercise the thresholding rule directly through a stub forward: build a
    // net, then check semantics on its output via predict()
    PinSiteNet<double> net(tiny_config());
    CHECK_THROWS_AS(predict(net, probs), ConfigError); // train mode rejected
    net.set_mode(Mode::infer);
    Rng rng(43);
    Tensor<double> x = random_tensor({1, 3, 32, 32}, rng, 0.5);
    Tensor<double> y = net.forward(x);
    const double pb = y.v[1];
    Prediction hi = predict(net, x, pb + 1e-6)[0];
    Prediction lo = predict(net, x, pb - 1e-6)[0];
    Prediction eq = predict(net, x, pb)[0];
    CHECK(hi.label == PinLabel::group_a);
    CHECK(lo.label == PinLabel::group_b);
    CHECK(eq.label == PinLabel::group_b); // ties go to group B
    CHECK(hi.p_group_a == doctest::Approx(1.0 - pb));
}

TEST_CASE("embedding has the configured width") {
    PinSiteNet<double> net(tiny_config());
    net.set_mode(Mode::infer);
    Rng rng(44);
    Tensor<double> x = random_tensor({2, 3, 32, 32}, rng, 0.5);
    Tensor<double> emb = extract_embedding(net, x);
    CHECK(emb.dims == std::vector<int>{2, 16});
    CHECK(net.embedding_width() == 16);
}

TEST_CASE("checkpoint round trip preserves predictions bit-exactly") {
    const std::string path = temp_path("pinsite_test_ckpt.psw");
    PinSiteNet<float> net(tiny_config());
    net.set_mode(Mode::infer);
    Rng rng(45);
    Tensor<float> x = random_tensor({2, 3, 32, 32}, rng, 0.5).cast<float>();
    Tensor<float> before = net.forward(x);
    save_checkpoint(net, path);
    auto loaded = load_checkpoint<float>(path);
    CHECK(loaded->mode() == Mode::infer);
    Tensor<float> after = loaded->forward(x);
    CHECK(before.v == after.v);

    // saving the loaded net reproduces the file byte for byte
    const std::string path2 = temp_path("pinsite_test_ckpt2.psw");
    save_checkpoint(*loaded, path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("checkpoint corruption is detected") {
    const std::string path = temp_path("pinsite_test_corrupt.psw");
    PinSiteNet<float> net(tiny_config());
    save_checkpoint(net, path);

    std::ifstream in(path, std::ios::binary);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    // flip one payload byte: CRC mismatch
    std::string bad = raw;
    bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 0x01);
    {
        std::ofstream out(path, std::ios::binary);
        out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
    }
    CHECK_THROWS_AS(load_checkpoint<float>(path), FormatError);

    // wrong magic
    bad = raw;
    bad[0] = 'X';
    {
        std::ofstream out(path, std::ios::binary);
        out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
    }
    CHECK_THROWS_AS(load_checkpoint<float>(path), FormatError);

    // truncation
    {
        std::ofstream out(path, std::ios::binary);
        out.write(raw.data(), static_cast<std::streamsize>(raw.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint<float>(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("tiny full-model gradient check") {
    ModelConfig cfg = tiny_config();
    cfg.input_size = 16;
    cfg.dropout1 = 0.0;
    cfg.dropout2 = 0.0;
    PinSiteNet<double> net(cfg);
    Rng rng(46);
    Tensor<double> x = random_tensor({2, 3, 16, 16}, rng, 0.5);
    Tensor<double> y = net.forward(x);
    testutil::Projection proj(y.size(), rng);
    net.zero_grads();
    Tensor<double> analytic = net.backward(proj.grad(y.dims));
    auto f = [&](const Tensor<double>& p) { return proj.value(net.forward(p)); };
    Tensor<double> numeric = finite_difference_gradient(f, x, 1e-5);
    CHECK(max_rel_err(analytic, numeric) < 1e-3);
    net.zero_grads();
}
