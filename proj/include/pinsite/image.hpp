#ifndef PINSITE_IMAGE_HPP
#define PINSITE_IMAGE_HPP

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "pinsite/errors.hpp"

namespace pinsite {

/// 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // 3 * width * height

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {
        if (w <= 0 || h <= 0) throw DataError("image dimensions must be positive");
    }

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && pixels == o.pixels;
    }
};

// ---------------------------------------------------------------------------
// PPM (binary P6).

inline void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("short write to " + path);
}

inline Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw FormatError(path + ": not a binary PPM");
    int w = 0, h = 0, maxval = 0;
    auto next_int = [&in, &path]() {
        for (;;) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        int v;
        if (!(in >> v)) throw FormatError(path + ": bad PPM header");
        return v;
    };
    w = next_int();
    h = next_int();
    maxval = next_int();
    if (maxval != 255) throw FormatError(path + ": only 8-bit PPM supported");
    in.get(); // single whitespace after maxval
    Image img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw FormatError(path + ": truncated PPM payload");
    return img;
}

// ---------------------------------------------------------------------------
// PNG, 8-bit non-interlaced. Decoder accepts gray/RGB/RGBA; encoder writes
// RGB with filter type 0 per row.

namespace detail {

inline std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

inline void push_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

inline void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                       const std::vector<std::uint8_t>& data) {
    push_be32(out, static_cast<std::uint32_t>(data.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    push_be32(out, crc);
}

inline std::uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

} // namespace detail

inline void write_png(const Image& img, const std::string& path) {
    const int w = img.width, h = img.height;
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(h) * (1 + static_cast<std::size_t>(w) * 3));
    for (int y = 0; y < h; ++y) {
        raw.push_back(0); // filter: none
        const std::uint8_t* row = &img.pixels[static_cast<std::size_t>(y) * w * 3];
        raw.insert(raw.end(), row, row + static_cast<std::size_t>(w) * 3);
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IoError("PNG deflate failed");
    comp.resize(comp_len);

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> ihdr;
    detail::push_be32(ihdr, static_cast<std::uint32_t>(w));
    detail::push_be32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // color type: RGB
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter
    ihdr.push_back(0); // non-interlaced
    detail::push_chunk(out, "IHDR", ihdr);
    detail::push_chunk(out, "IDAT", comp);
    detail::push_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to " + path);
}

inline Image read_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (buf.size() < 8 || std::memcmp(buf.data(), sig, 8) != 0)
        throw FormatError(path + ": not a PNG");
    std::size_t pos = 8;
    int w = 0, h = 0, color_type = -1, channels = 0;
    std::vector<std::uint8_t> idat;
    bool saw_end = false;
    while (pos + 8 <= buf.size() && !saw_end) {
        std::uint32_t len = detail::be32(&buf[pos]);
        if (pos + 12 + len > buf.size()) throw FormatError(path + ": truncated PNG chunk");
        std::string type(reinterpret_cast<const char*>(&buf[pos + 4]), 4);
        const std::uint8_t* data = &buf[pos + 8];
        if (type == "IHDR") {
            if (len != 13) throw FormatError(path + ": bad IHDR");
            w = static_cast<int>(detail::be32(data));
            h = static_cast<int>(detail::be32(data + 4));
            int depth = data[8];
            color_type = data[9];
            if (depth != 8) throw FormatError(path + ": only 8-bit PNG supported");
            if (data[12] != 0) throw FormatError(path + ": interlaced PNG not supported");
            if (color_type == 0) channels = 1;
            else if (color_type == 2) channels = 3;
            else if (color_type == 6) channels = 4;
            else throw FormatError(path + ": unsupported PNG color type");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            saw_end = true;
        }
        pos += 12 + len;
    }
    if (w <= 0 || h <= 0 || idat.empty()) throw FormatError(path + ": missing PNG data");

    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(h) * (stride + 1));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    int rc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || raw_len != raw.size()) throw FormatError(path + ": PNG inflate failed");

    // undo per-row filters in place
    std::vector<std::uint8_t> prev(stride, 0);
    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        std::uint8_t* row = &raw[static_cast<std::size_t>(y) * (stride + 1)];
        const int filter = row[0];
        std::uint8_t* cur = row + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(channels) ? cur[i - channels] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<std::size_t>(channels) ? prev[i - channels] : 0;
            switch (filter) {
                case 0: break;
                case 1: cur[i] = static_cast<std::uint8_t>(cur[i] + a); break;
                case 2: cur[i] = static_cast<std::uint8_t>(cur[i] + b); break;
                case 3: cur[i] = static_cast<std::uint8_t>(cur[i] + (a + b) / 2); break;
                case 4: cur[i] = static_cast<std::uint8_t>(cur[i] + detail::paeth(a, b, c)); break;
                default: throw FormatError(path + ": bad PNG filter type");
            }
        }
        std::copy(cur, cur + stride, prev.begin());
        for (int x = 0; x < w; ++x) {
            if (channels == 1) {
                std::uint8_t g = cur[x];
                img.at(x, y, 0) = img.at(x, y, 1) = img.at(x, y, 2) = g;
            } else {
                img.at(x, y, 0) = cur[static_cast<std::size_t>(x) * channels];
                img.at(x, y, 1) = cur[static_cast<std::size_t>(x) * channels + 1];
                img.at(x, y, 2) = cur[static_cast<std::size_t>(x) * channels + 2];
            }
        }
    }
    return img;
}

/// Dispatch on extension; .png and .ppm are the supported interchange formats.
inline Image read_image(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".ppm") return read_ppm(path);
    if (ext == ".png") return read_png(path);
    throw FormatError(path + ": unsupported image format (png/ppm only)");
}

} // namespace pinsite

#endif
