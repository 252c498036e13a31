#ifndef PINSITE_AUGMENT_HPP
#define PINSITE_AUGMENT_HPP

#include <cmath>
#include <string>
#include <vector>

#include "pinsite/labeled_image.hpp"
#include "pinsite/rng.hpp"

namespace pinsite {

enum class AugKind {
    hflip,
    vflip,
    brightness,
    contrast,
    rotate,
    vflip_rotate,
    shear,
    cutout
};

inline constexpr int kNumAugKinds = 8;

inline const char* aug_suffix(AugKind k) {
    switch (k) {
        case AugKind::hflip: return "_hf";
        case AugKind::vflip: return "_vf";
        case AugKind::brightness: return "_br";
        case AugKind::contrast: return "_ct";
        case AugKind::rotate: return "_rot";
        case AugKind::vflip_rotate: return "_vfr";
        case AugKind::shear: return "_sh";
        case AugKind::cutout: return "_co";
    }
    return "";
}

/// One sampled transform. p1/p2 hold the kind's parameter: enhancement factor
/// (brightness/contrast), angle in degrees (rotate/vflip_rotate/shear), or the
/// cutout center (p1=x, p2=y).
struct AugmentSpec {
    AugKind kind = AugKind::hflip;
    double p1 = 0;
    double p2 = 0;

    void validate(int width, int height) const {
        switch (kind) {
            case AugKind::hflip:
            case AugKind::vflip:
                return;
            case AugKind::brightness:
            case AugKind::contrast:
                if (p1 < 1.1 || p1 > 1.5)
                    throw ConfigError("enhancement factor must be in [1.1, 1.5]");
                return;
            case AugKind::rotate:
            case AugKind::vflip_rotate:
                if (p1 < -45.0 || p1 > 45.0)
                    throw ConfigError("rotation angle must be in [-45, 45] degrees");
                return;
            case AugKind::shear:
                if (p1 < -16.0 || p1 > 16.0)
                    throw ConfigError("shear angle must be in [-16, 16] degrees");
                return;
            case AugKind::cutout:
                if (p1 < 0 || p1 >= width || p2 < 0 || p2 >= height)
                    throw ConfigError("cutout center outside the image");
                return;
        }
        throw ConfigError("unknown augmentation kind");
    }
};

inline AugmentSpec sample_augment(AugKind kind, Rng& rng, int width, int height) {
    AugmentSpec s;
    s.kind = kind;
    switch (kind) {
        case AugKind::hflip:
        case AugKind::vflip:
            break;
        case AugKind::brightness:
        case AugKind::contrast:
            s.p1 = rng.uniform(1.1, 1.5);
            break;
        case AugKind::rotate:
        case AugKind::vflip_rotate:
            s.p1 = rng.uniform(-45.0, 45.0);
            break;
        case AugKind::shear:
            s.p1 = rng.uniform(-16.0, 16.0);
            break;
        case AugKind::cutout:
            s.p1 = std::floor(rng.uniform(0.0, static_cast<double>(width)));
            s.p2 = std::floor(rng.uniform(0.0, static_cast<double>(height)));
            break;
    }
    return s;
}

namespace detail {

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, std::round(v))));
}

/// Inverse-map geometric warp with bilinear sampling about the image center,
/// zero fill outside. map(src_x, src_y) computes the source position of a
/// destination pixel.
template <typename MapFn>
Image warp(const Image& src, MapFn map) {
    Image dst(src.width, src.height);
    const double cx = (src.width - 1) / 2.0, cy = (src.height - 1) / 2.0;
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            double sx, sy;
            map(x - cx, y - cy, sx, sy);
            sx += cx;
            sy += cy;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            for (int c = 0; c < 3; ++c) {
                double acc = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int xi = x0 + dx, yi = y0 + dy;
                        const double wgt = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy);
                        if (wgt == 0.0) continue;
                        const double pix = (xi >= 0 && xi < src.width && yi >= 0 &&
                                            yi < src.height)
                                               ? src.at(xi, yi, c)
                                               : 0.0;
                        acc += wgt * pix;
                    }
                dst.at(x, y, c) = clamp_u8(acc);
            }
        }
    return dst;
}

inline Image flip(const Image& src, bool horizontal) {
    Image dst(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            for (int c = 0; c < 3; ++c)
                dst.at(x, y, c) = horizontal ? src.at(src.width - 1 - x, y, c)
                                             : src.at(x, src.height - 1 - y, c);
    return dst;
}

inline Image rotate(const Image& src, double degrees) {
    const double th = degrees * 3.14159265358979323846 / 180.0;
    const double co = std::cos(th), si = std::sin(th);
    return warp(src, [co, si](double x, double y, double& sx, double& sy) {
        // inverse rotation
        sx = co * x + si * y;
        sy = -si * x + co * y;
    });
}

} // namespace detail

inline Image apply_augment(const Image& img, const AugmentSpec& spec) {
    spec.validate(img.width, img.height);
    switch (spec.kind) {
        case AugKind::hflip:
            return detail::flip(img, true);
        case AugKind::vflip:
            return detail::flip(img, false);
        case AugKind::brightness: {
            Image out = img;
            for (std::uint8_t& v : out.pixels) v = detail::clamp_u8(v * spec.p1);
            return out;
        }
        case AugKind::contrast: {
            // pivot at the per-image per-channel mean
            double mean[3] = {0, 0, 0};
            const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
            for (std::size_t i = 0; i < n; ++i)
                for (int c = 0; c < 3; ++c) mean[c] += img.pixels[i * 3 + c];
            for (double& m : mean) m /= static_cast<double>(n);
            Image out = img;
            for (std::size_t i = 0; i < n; ++i)
                for (int c = 0; c < 3; ++c)
                    out.pixels[i * 3 + c] = detail::clamp_u8(
                        (img.pixels[i * 3 + c] - mean[c]) * spec.p1 + mean[c]);
            return out;
        }
        case AugKind::rotate:
            return detail::rotate(img, spec.p1);
        case AugKind::vflip_rotate:
            return detail::rotate(detail::flip(img, false), spec.p1);
        case AugKind::shear: {
            const double t = std::tan(spec.p1 * 3.14159265358979323846 / 180.0);
            return detail::warp(img, [t](double x, double y, double& sx, double& sy) {
                sx = x - t * y;
                sy = y;
            });
        }
        case AugKind::cutout: {
            Image out = img;
            const int half = 15; // 30 x 30 region
            const int cx = static_cast<int>(spec.p1), cy = static_cast<int>(spec.p2);
            for (int y = std::max(0, cy - half); y < std::min(img.height, cy + half); ++y)
                for (int x = std::max(0, cx - half); x < std::min(img.width, cx + half); ++x)
                    for (int c = 0; c < 3; ++c) out.at(x, y, c) = 0;
            return out;
        }
    }
    throw ConfigError("unknown augmentation kind");
}

/// 9x expansion: the originals followed by one sampled instance of each of the
/// eight transforms per original. Deterministic given the seed; per-image
/// child streams keep the output order-independent of any parallel schedule.
inline std::vector<LabeledImage> expand_training_set(const std::vector<LabeledImage>& images,
                                                     std::uint64_t seed) {
    std::vector<LabeledImage> out;
    out.reserve(images.size() * 9);
    for (const auto& li : images) out.push_back(li);
    Rng root(seed);
    for (std::size_t i = 0; i < images.size(); ++i) {
        Rng rng = root.fork(i);
        const auto& src = images[i];
        for (int k = 0; k < kNumAugKinds; ++k) {
            const AugKind kind = static_cast<AugKind>(k);
            AugmentSpec spec = sample_augment(kind, rng, src.image.width, src.image.height);
            LabeledImage li;
            li.id = src.id + aug_suffix(kind);
            li.label = src.label;
            li.image = apply_augment(src.image, spec);
            out.push_back(std::move(li));
        }
    }
    return out;
}

} // namespace pinsite

#endif
