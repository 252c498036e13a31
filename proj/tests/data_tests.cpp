#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pinsite/data.hpp"

using namespace pinsite;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Image noise_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    Image img(w, h);
    for (std::uint8_t& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(256));
    return img;
}

} // namespace

TEST_CASE("split sizes reproduce the published arithmetic") {
    SplitSizes s = split_sizes(666);
    CHECK(s.train == 372);
    CHECK(s.val == 94);
    CHECK(s.test == 200);
    SplitSizes t = split_sizes(10);
    CHECK(t.train == 5);
    CHECK(t.val == 2);
    CHECK(t.test == 3);
}

TEST_CASE("split is a seeded permutation partition") {
    std::vector<LabeledImage> items;
    for (int i = 0; i < 20; ++i) {
        LabeledImage li;
        li.id = "s" + std::to_string(i);
        li.label = i % 2 ? PinLabel::group_a : PinLabel::group_b;
        li.image = Image(2, 2);
        items.push_back(std::move(li));
    }
    DatasetSplit a = split_dataset(items, 5);
    DatasetSplit b = split_dataset(items, 5);
    DatasetSplit c = split_dataset(items, 6);
    CHECK(a.train.size() == 11);
    CHECK(a.val.size() == 3);
    CHECK(a.test.size() == 6);
    auto ids = [](const DatasetSplit& s) {
        std::vector<std::string> out;
        for (const auto& x : s.train) out.push_back(x.id);
        for (const auto& x : s.val) out.push_back(x.id);
        for (const auto& x : s.test) out.push_back(x.id);
        return out;
    };
    CHECK(ids(a) == ids(b));
    CHECK(ids(a) != ids(c));
    auto sorted = ids(a);
    std::sort(sorted.begin(), sorted.end());
    auto expect = ids(a);
    std::sort(expect.begin(), expect.end());
    CHECK(sorted == expect); // partition: every id exactly once
    std::vector<LabeledImage> few(items.begin(), items.begin() + 9);
    CHECK_THROWS_AS(split_dataset(few, 5), DataError);
}

TEST_CASE("prepare maps bytes into the unit interval") {
    Image img(8, 8);
    for (std::uint8_t& p : img.pixels) p = 51;
    Tensor<float> t = prepare<float>(img, 8);
    CHECK(t.dims == std::vector<int>{3, 8, 8});
    for (float v : t.v) CHECK(v == doctest::Approx(0.2f));
    Tensor<float> up = prepare<float>(img, 16);
    CHECK(up.dims == std::vector<int>{3, 16, 16});
    for (float v : up.v) CHECK(v == doctest::Approx(0.2f));
}

TEST_CASE("same-size resize is the identity") {
    Image img = noise_image(13, 9, 71);
    CHECK(resize_bilinear(img, 13, 9) == img);
}

TEST_CASE("make_batch stacks prepared images") {
    Image a = noise_image(10, 10, 72);
    Image b = noise_image(12, 8, 73);
    Tensor<float> batch = make_batch<float>({&a, &b}, 8);
    CHECK(batch.dims == std::vector<int>{2, 3, 8, 8});
    Tensor<float> solo = prepare<float>(b, 8);
    for (std::size_t i = 0; i < solo.size(); ++i)
        CHECK(batch.v[solo.size() + i] == solo.v[i]);
    CHECK_THROWS_AS(make_batch<float>({}, 8), DataError);
}

TEST_CASE("ppm and png codecs round-trip") {
    TempDir tmp("pinsite_test_codec");
    Image img = noise_image(23, 17, 74);
    const std::string ppm = (tmp.path / "x.ppm").string();
    const std::string png = (tmp.path / "x.png").string();
    write_ppm(img, ppm);
    write_png(img, png);
    CHECK(read_ppm(ppm) == img);
    CHECK(read_png(png) == img);
    CHECK(read_image(ppm) == img);
    CHECK(read_image(png) == img);
    CHECK_THROWS_AS(read_image((tmp.path / "x.bmp").string()), FormatError);
    CHECK_THROWS_AS(read_png(ppm), FormatError);
}

TEST_CASE("dataset loader walks class directories and reports bad files") {
    TempDir tmp("pinsite_test_load");
    fs::create_directories(tmp.path / "groupA");
    fs::create_directories(tmp.path / "groupB");
    write_png(noise_image(8, 8, 75), (tmp.path / "groupA" / "a1.png").string());
    write_ppm(noise_image(8, 8, 76), (tmp.path / "groupA" / "a2.ppm").string());
    write_png(noise_image(8, 8, 77), (tmp.path / "groupB" / "b1.png").string());
    {
        std::ofstream junk(tmp.path / "groupB" / "bad.png");
        junk << "not a png";
    }
    std::vector<std::string> errors;
    auto items = load_dataset(tmp.path.string(), &errors);
    CHECK(items.size() == 3);
    CHECK(items[0].id == "a1");
    CHECK(items[0].label == PinLabel::group_a);
    CHECK(items[2].label == PinLabel::group_b);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("bad.png") != std::string::npos);

    fs::remove_all(tmp.path / "groupB");
    CHECK_THROWS_AS(load_dataset(tmp.path.string()), DataError);
}

TEST_CASE("duplicate ids across classes are rejected") {
    TempDir tmp("pinsite_test_dup");
    fs::create_directories(tmp.path / "groupA");
    fs::create_directories(tmp.path / "groupB");
    write_png(noise_image(8, 8, 78), (tmp.path / "groupA" / "same.png").string());
    write_png(noise_image(8, 8, 79), (tmp.path / "groupB" / "same.png").string());
    CHECK_THROWS_AS(load_dataset(tmp.path.string()), DataError);
}

TEST_CASE("synthetic generator is deterministic and writes a manifest") {
    TempDir tmp("pinsite_test_synth");
    auto m1 = generate_synthetic(3, 99, (tmp.path / "run1").string());
    auto m2 = generate_synthetic(3, 99, (tmp.path / "run2").string());
    REQUIRE(m1.size() == 6);
    CHECK(m1[0].id == "a_0000");
    CHECK(m1[3].id == "b_0000");
    CHECK(m1[0].bbox.has_value());
    CHECK(!m1[3].bbox.has_value());
    Image a1 = read_png((tmp.path / "run1" / "groupA" / "a_0001.png").string());
    Image a2 = read_png((tmp.path / "run2" / "groupA" / "a_0001.png").string());
    CHECK(a1 == a2);

    auto parsed = read_manifest((tmp.path / "run1" / "manifest.csv").string());
    REQUIRE(parsed.size() == 6);
    CHECK(parsed[0].label == PinLabel::group_a);
    CHECK(parsed[0].bbox->w == m1[0].bbox->w);
    CHECK(parsed[5].label == PinLabel::group_b);
}

TEST_CASE("group A blobs raise the red channel inside their bounding box") {
    Rng root(123);
    int hits = 0;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
        BlobBox box;
        LabeledImage li = synthesize_sample(PinLabel::group_a, root.fork(i), "x", &box);
        double inside = 0, total = 0;
        std::int64_t in_count = 0;
        for (int y = 0; y < li.image.height; ++y)
            for (int x = 0; x < li.image.width; ++x) {
                total += li.image.at(x, y, 0);
                if (x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h) {
                    inside += li.image.at(x, y, 0);
                    ++in_count;
                }
            }
        const double img_mean = total / (li.image.width * li.image.height);
        if (inside / in_count >= img_mean + 10.0) ++hits;
    }
    CHECK(hits >= static_cast<int>(0.95 * n));
}
