#ifndef PINSITE_DATA_HPP
#define PINSITE_DATA_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pinsite/labeled_image.hpp"
#include "pinsite/rng.hpp"
#include "pinsite/tensor.hpp"

namespace pinsite {

// ---------------------------------------------------------------------------
// Resize + normalization.

inline Image resize_bilinear(const Image& src, int out_w, int out_h) {
    if (src.width <= 0 || src.height <= 0) throw DataError("resize of empty image");
    if (src.width == out_w && src.height == out_h) return src;
    Image dst(out_w, out_h);
    const double sx = static_cast<double>(src.width) / out_w;
    const double sy = static_cast<double>(src.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::max(0.0, std::min(fy, static_cast<double>(src.height - 1)));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::max(0.0, std::min(fx, static_cast<double>(src.width - 1)));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double v = (1 - wy) * ((1 - wx) * src.at(x0, y0, c) + wx * src.at(x1, y0, c)) +
                                 wy * ((1 - wx) * src.at(x0, y1, c) + wx * src.at(x1, y1, c));
                dst.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }
    return dst;
}

/// Bilinear resize to `size` x `size`, components scaled to [0,1].
template <typename T>
Tensor<T> prepare(const Image& img, int size = 224) {
    Image r = resize_bilinear(img, size, size);
    Tensor<T> t({3, size, size});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                t.v[(static_cast<std::size_t>(c) * size + y) * size + x] =
                    static_cast<T>(r.at(x, y, c)) / T(255);
    return t;
}

/// Stack prepared images into an N x 3 x size x size batch.
template <typename T>
Tensor<T> make_batch(const std::vector<const Image*>& images, int size = 224) {
    if (images.empty()) throw DataError("empty batch");
    const int N = static_cast<int>(images.size());
    Tensor<T> batch({N, 3, size, size});
    const std::size_t chunk = static_cast<std::size_t>(3) * size * size;
    for (int i = 0; i < N; ++i) {
        Tensor<T> one = prepare<T>(*images[i], size);
        std::copy(one.v.begin(), one.v.end(), batch.v.begin() + static_cast<std::ptrdiff_t>(i * chunk));
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Dataset loading: <root>/groupA/*.{png,ppm}, <root>/groupB/*.{png,ppm}.

inline std::vector<LabeledImage> load_dataset(const std::string& root,
                                              std::vector<std::string>* file_errors = nullptr) {
    namespace fs = std::filesystem;
    const std::pair<const char*, PinLabel> dirs[] = {{"groupA", PinLabel::group_a},
                                                     {"groupB", PinLabel::group_b}};
    std::vector<LabeledImage> items;
    std::map<std::string, PinLabel> seen;
    for (const auto& [sub, label] : dirs) {
        fs::path dir = fs::path(root) / sub;
        if (!fs::is_directory(dir)) throw DataError("missing class directory: " + dir.string());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (!e.is_regular_file()) continue;
            std::string ext = e.path().extension().string();
            for (char& c : ext) c = static_cast<char>(std::tolower(c));
            if (ext == ".png" || ext == ".ppm") files.push_back(e.path());
        }
        if (files.empty()) throw DataError("no images in class directory: " + dir.string());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string id = f.stem().string();
            auto it = seen.find(id);
            if (it != seen.end() && it->second != label)
                throw DataError("duplicate id across classes: " + id);
            try {
                LabeledImage li;
                li.id = id;
                li.label = label;
                li.image = read_image(f.string());
                items.push_back(std::move(li));
                seen.emplace(id, label);
            } catch (const Error& e) {
                if (file_errors) file_errors->push_back(f.string() + ": " + e.what());
            }
        }
    }
    std::sort(items.begin(), items.end(),
              [](const LabeledImage& a, const LabeledImage& b) { return a.id < b.id; });
    return items;
}

// ---------------------------------------------------------------------------
// Seeded 70:30 split, then 80:20 of the training pool.

struct DatasetSplit {
    std::vector<LabeledImage> train, val, test;
    std::uint64_t seed = 0;
};

struct SplitSizes {
    std::size_t train, val, test;
};

inline SplitSizes split_sizes(std::size_t n) {
    const std::size_t pool = static_cast<std::size_t>(0.7 * static_cast<double>(n));
    const std::size_t train = static_cast<std::size_t>(0.8 * static_cast<double>(pool));
    return {train, pool - train, n - pool};
}

inline DatasetSplit split_dataset(std::vector<LabeledImage> items, std::uint64_t seed) {
    if (items.size() < 10) throw DataError("dataset too small to split (need >= 10 items)");
    std::sort(items.begin(), items.end(),
              [](const LabeledImage& a, const LabeledImage& b) { return a.id < b.id; });
    Rng rng(seed);
    for (std::size_t i = items.size() - 1; i > 0; --i)
        std::swap(items[i], items[rng.uniform_int(i + 1)]);
    const SplitSizes sz = split_sizes(items.size());
    DatasetSplit s;
    s.seed = seed;
    s.train.assign(items.begin(), items.begin() + sz.train);
    s.val.assign(items.begin() + sz.train, items.begin() + sz.train + sz.val);
    s.test.assign(items.begin() + sz.train + sz.val, items.end());
    return s;
}

inline void write_split_manifest(const DatasetSplit& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "id,split\n";
    for (const auto& li : s.train) out << li.id << ",train\n";
    for (const auto& li : s.val) out << li.id << ",val\n";
    for (const auto& li : s.test) out << li.id << ",test\n";
}

// ---------------------------------------------------------------------------
// Synthetic pin-site generator. Group A samples carry a reddish radial blob
// at the pin entry point; its bounding box is persisted so explainability
// checks can score localization.

struct BlobBox {
    int x = 0, y = 0, w = 0, h = 0;
};

struct ManifestEntry {
    std::string id;
    PinLabel label = PinLabel::group_a;
    std::optional<BlobBox> bbox;
};

inline constexpr int kSyntheticSize = 256;

namespace detail {

inline void draw_pin(Image& img, double ex, double ey, double angle, Rng& rng) {
    const double dx = std::cos(angle), dy = std::sin(angle);
    for (double t = 0; t < 2.0 * kSyntheticSize; t += 0.5) {
        const int px = static_cast<int>(ex + t * dx);
        const int py = static_cast<int>(ey + t * dy);
        if (px < -2 || px >= img.width + 2 || py < -2 || py >= img.height + 2) break;
        for (int oy = -1; oy <= 1; ++oy)
            for (int ox = -1; ox <= 1; ++ox) {
                const int qx = px + ox, qy = py + oy;
                if (qx < 0 || qx >= img.width || qy < 0 || qy >= img.height) continue;
                const double n = rng.uniform(-6.0, 6.0);
                img.at(qx, qy, 0) = static_cast<std::uint8_t>(std::clamp(58.0 + n, 0.0, 255.0));
                img.at(qx, qy, 1) = static_cast<std::uint8_t>(std::clamp(58.0 + n, 0.0, 255.0));
                img.at(qx, qy, 2) = static_cast<std::uint8_t>(std::clamp(64.0 + n, 0.0, 255.0));
            }
    }
}

} // namespace detail

inline LabeledImage synthesize_sample(PinLabel label, Rng rng, const std::string& id,
                                      BlobBox* bbox_out) {
    const int S = kSyntheticSize;
    Image img(S, S);
    // skin-tone background with randomized hue/brightness plus pixel noise; the
    // hue ranges overlap heavily between samples so overall color carries no
    // label signal — only the local blob structure separates the classes
    const double base_r = rng.uniform(160.0, 210.0);
    const double base_g = base_r * rng.uniform(0.62, 0.88);
    const double base_b = base_r * rng.uniform(0.45, 0.75);
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            const double n = rng.uniform(-9.0, 9.0);
            img.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(base_r + n, 0.0, 255.0));
            img.at(x, y, 1) = static_cast<std::uint8_t>(std::clamp(base_g + n, 0.0, 255.0));
            img.at(x, y, 2) = static_cast<std::uint8_t>(std::clamp(base_b + n, 0.0, 255.0));
        }
    // pin entry point away from the borders
    const double ex = rng.uniform(0.25 * S, 0.75 * S);
    const double ey = rng.uniform(0.25 * S, 0.75 * S);
    const double angle = rng.uniform(0.0, 6.283185307179586);
    detail::draw_pin(img, ex, ey, angle, rng);

    if (label == PinLabel::group_a) {
        const double radius = rng.uniform(20.0, 60.0);
        const double amp = rng.uniform(60.0, 95.0);
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                const double d = std::hypot(x - ex, y - ey);
                if (d >= radius) continue;
                const double f = 1.0 - d / radius;
                img.at(x, y, 0) =
                    static_cast<std::uint8_t>(std::clamp(img.at(x, y, 0) + amp * f, 0.0, 255.0));
                img.at(x, y, 1) = static_cast<std::uint8_t>(
                    std::clamp(img.at(x, y, 1) - 0.35 * amp * f, 0.0, 255.0));
                img.at(x, y, 2) = static_cast<std::uint8_t>(
                    std::clamp(img.at(x, y, 2) - 0.25 * amp * f, 0.0, 255.0));
            }
        if (bbox_out) {
            const int x0 = std::max(0, static_cast<int>(ex - radius));
            const int y0 = std::max(0, static_cast<int>(ey - radius));
            const int x1 = std::min(S - 1, static_cast<int>(ex + radius));
            const int y1 = std::min(S - 1, static_cast<int>(ey + radius));
            *bbox_out = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
        }
    }
    LabeledImage li;
    li.id = id;
    li.label = label;
    li.image = std::move(img);
    return li;
}

inline std::vector<ManifestEntry> generate_synthetic(int n_per_class, std::uint64_t seed,
                                                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "groupA", ec);
    fs::create_directories(fs::path(out_dir) / "groupB", ec);
    if (!fs::is_directory(fs::path(out_dir) / "groupA") ||
        !fs::is_directory(fs::path(out_dir) / "groupB"))
        throw IoError("cannot create output directories under " + out_dir);

    Rng root(seed);
    std::vector<ManifestEntry> manifest;
    for (int cls = 0; cls < 2; ++cls) {
        const PinLabel label = cls == 0 ? PinLabel::group_a : PinLabel::group_b;
        for (int i = 0; i < n_per_class; ++i) {
            std::ostringstream id;
            id << (cls == 0 ? "a_" : "b_") << std::setw(4) << std::setfill('0') << i;
            BlobBox bbox;
            LabeledImage li = synthesize_sample(
                label, root.fork(static_cast<std::uint64_t>(cls) * 1000003u + i), id.str(),
                &bbox);
            const std::string sub = cls == 0 ? "groupA" : "groupB";
            write_png(li.image, (fs::path(out_dir) / sub / (li.id + ".png")).string());
            ManifestEntry e;
            e.id = li.id;
            e.label = label;
            if (label == PinLabel::group_a) e.bbox = bbox;
            manifest.push_back(std::move(e));
        }
    }
    std::ofstream mf(fs::path(out_dir) / "manifest.csv");
    if (!mf) throw IoError("cannot write manifest under " + out_dir);
    mf << "id,label,bbox_x,bbox_y,bbox_w,bbox_h\n";
    for (const auto& e : manifest) {
        mf << e.id << "," << label_name(e.label) << ",";
        if (e.bbox)
            mf << e.bbox->x << "," << e.bbox->y << "," << e.bbox->w << "," << e.bbox->h;
        else
            mf << ",,,";
        mf << "\n";
    }
    return manifest;
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::vector<ManifestEntry> out;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, label, xs, ys, ws, hs;
        std::getline(ls, id, ',');
        std::getline(ls, label, ',');
        std::getline(ls, xs, ',');
        std::getline(ls, ys, ',');
        std::getline(ls, ws, ',');
        std::getline(ls, hs, ',');
        ManifestEntry e;
        e.id = id;
        e.label = label == "GroupA" ? PinLabel::group_a : PinLabel::group_b;
        if (!xs.empty())
            e.bbox = BlobBox{std::stoi(xs), std::stoi(ys), std::stoi(ws), std::stoi(hs)};
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace pinsite

#endif
