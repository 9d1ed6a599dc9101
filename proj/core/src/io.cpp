#include "micc/io.hpp"

#include "micc/color.hpp"

#include <nlohmann/json.hpp>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

using nlohmann::json;

namespace micc::io {

namespace {

struct FileCloser {
    void operator()(FILE *f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png)
            png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png)
            png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

// Decodes to interleaved RGB rows; 8-bit stays 8, 16-bit yields big-endian
// byte pairs which we assemble ourselves.
void read_png_rgb(const std::string &path, int &w, int &h, int &bit_depth,
                  std::vector<uint8_t> &bytes, bool to_gray = false) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw IoError("cannot open " + path);
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                   nullptr);
    if (!r.png)
        throw IoError("libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info)
        throw IoError("libpng info init failed");
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(r.png)))
        throw FormatError("invalid PNG: " + path);

    png_init_io(r.png, f.get());
    png_read_info(r.png, r.info);

    png_set_palette_to_rgb(r.png);
    png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(r.png);
    if (png_get_color_type(r.png, r.info) & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(r.png);
    if (to_gray) {
        if (png_get_color_type(r.png, r.info) & PNG_COLOR_MASK_COLOR)
            png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
        png_set_strip_16(r.png);
    } else {
        if (!(png_get_color_type(r.png, r.info) & PNG_COLOR_MASK_COLOR))
            png_set_gray_to_rgb(r.png);
    }
    png_read_update_info(r.png, r.info);

    w = int(png_get_image_width(r.png, r.info));
    h = int(png_get_image_height(r.png, r.info));
    bit_depth = int(png_get_bit_depth(r.png, r.info));
    size_t rowbytes = png_get_rowbytes(r.png, r.info);
    bytes.resize(rowbytes * size_t(h));
    rows.resize(size_t(h));
    for (int y = 0; y < h; ++y)
        rows[size_t(y)] = bytes.data() + rowbytes * size_t(y);
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
}

void write_png(const std::string &path, int w, int h, int bit_depth,
               int color_type, const std::vector<uint8_t> &bytes) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw IoError("cannot write " + path);
    PngWriter wr;
    wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                     nullptr);
    if (!wr.png)
        throw IoError("libpng init failed");
    wr.info = png_create_info_struct(wr.png);
    if (!wr.info)
        throw IoError("libpng info init failed");
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    if (setjmp(png_jmpbuf(wr.png)))
        throw IoError("PNG write failed: " + path);

    png_init_io(wr.png, f.get());
    png_set_IHDR(wr.png, wr.info, png_uint_32(w), png_uint_32(h), bit_depth,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(wr.png, wr.info);
    int channels = (color_type == PNG_COLOR_TYPE_RGB) ? 3 : 1;
    size_t rowbytes = size_t(w) * size_t(channels) * size_t(bit_depth / 8);
    for (int y = 0; y < h; ++y)
        rows[size_t(y)] =
            const_cast<png_bytep>(bytes.data() + rowbytes * size_t(y));
    png_write_image(wr.png, rows.data());
    png_write_end(wr.png, nullptr);
}

} // namespace

LinearImage load_png_linear(const std::string &path) {
    int w, h, depth;
    std::vector<uint8_t> bytes;
    read_png_rgb(path, w, h, depth, bytes);
    LinearImage img(w, h);
    if (depth == 8) {
        for (size_t i = 0; i < size_t(w) * size_t(h) * 3; ++i)
            img.data()[i] = float(srgb_to_linear(double(bytes[i]) / 255.0));
    } else if (depth == 16) {
        for (size_t i = 0; i < size_t(w) * size_t(h) * 3; ++i) {
            uint16_t v = uint16_t((bytes[2 * i] << 8) | bytes[2 * i + 1]);
            img.data()[i] = float(srgb_to_linear(double(v) / 65535.0));
        }
    } else {
        throw FormatError("unsupported PNG bit depth in " + path);
    }
    return img;
}

void save_png16_srgb(const std::string &path, const LinearImage &linear) {
    const size_t n = linear.pixel_count() * 3;
    std::vector<uint8_t> bytes(n * 2);
    for (size_t i = 0; i < n; ++i) {
        double enc = linear_to_srgb(double(linear.data()[i]));
        uint16_t v = uint16_t(std::lround(enc * 65535.0));
        bytes[2 * i] = uint8_t(v >> 8);
        bytes[2 * i + 1] = uint8_t(v & 0xff);
    }
    write_png(path, linear.width(), linear.height(), 16, PNG_COLOR_TYPE_RGB,
              bytes);
}

void save_png8_srgb(const std::string &path, const LinearImage &linear) {
    const size_t n = linear.pixel_count() * 3;
    std::vector<uint8_t> bytes(n);
    for (size_t i = 0; i < n; ++i) {
        double enc = linear_to_srgb(double(linear.data()[i]));
        bytes[i] = uint8_t(std::lround(enc * 255.0));
    }
    write_png(path, linear.width(), linear.height(), 8, PNG_COLOR_TYPE_RGB,
              bytes);
}

std::vector<uint8_t> load_mask_png(const std::string &path, int &width,
                                   int &height) {
    int depth;
    std::vector<uint8_t> bytes;
    read_png_rgb(path, width, height, depth, bytes, /*to_gray=*/true);
    std::vector<uint8_t> mask(size_t(width) * size_t(height));
    for (size_t i = 0; i < mask.size(); ++i)
        mask[i] = bytes[i] != 0 ? 1 : 0;
    return mask;
}

void save_mask_png(const std::string &path, const std::vector<uint8_t> &mask,
                   int width, int height) {
    if (mask.size() != size_t(width) * size_t(height))
        throw ShapeError("mask size does not match dimensions");
    std::vector<uint8_t> bytes(mask.size());
    for (size_t i = 0; i < mask.size(); ++i)
        bytes[i] = mask[i] ? 255 : 0;
    write_png(path, width, height, 8, PNG_COLOR_TYPE_GRAY, bytes);
}

void save_gray_png8(const std::string &path, const std::vector<float> &plane,
                    int width, int height) {
    if (plane.size() != size_t(width) * size_t(height))
        throw ShapeError("plane size does not match dimensions");
    std::vector<uint8_t> bytes(plane.size());
    for (size_t i = 0; i < plane.size(); ++i) {
        double v = std::clamp(double(plane[i]), 0.0, 1.0);
        bytes[i] = uint8_t(std::lround(v * 255.0));
    }
    write_png(path, width, height, 8, PNG_COLOR_TYPE_GRAY, bytes);
}

SegmentMap load_segments_png(const std::string &path, int n_labels) {
    int w, h, depth;
    std::vector<uint8_t> bytes;
    read_png_rgb(path, w, h, depth, bytes, /*to_gray=*/true);
    SegmentMap seg;
    seg.width = w;
    seg.height = h;
    seg.n_labels = n_labels;
    seg.label.resize(size_t(w) * size_t(h));
    for (size_t i = 0; i < seg.label.size(); ++i)
        seg.label[i] = int32_t(bytes[i]);
    seg.validate();
    return seg;
}

void save_segments_png(const std::string &path, const SegmentMap &segments) {
    if (segments.n_labels > 256)
        throw FormatError("segment PNG supports at most 256 labels");
    std::vector<uint8_t> bytes(segments.label.size());
    for (size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = uint8_t(segments.label[i]);
    write_png(path, segments.width, segments.height, 8, PNG_COLOR_TYPE_GRAY,
              bytes);
}

namespace {

void load_pfm_raw(const std::string &path, int &w, int &h,
                  std::vector<float> &data) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path);
    std::string magic;
    double scale;
    f >> magic >> w >> h >> scale;
    if (magic != "PF")
        throw FormatError(path + ": not a color PFM");
    if (w <= 0 || h <= 0)
        throw FormatError(path + ": bad PFM dimensions");
    f.get(); // single whitespace after the header
    data.resize(size_t(w) * size_t(h) * 3);
    std::vector<float> row(size_t(w) * 3);
    for (int y = h - 1; y >= 0; --y) { // PFM rows are bottom-up
        f.read(reinterpret_cast<char *>(row.data()),
               std::streamsize(row.size() * sizeof(float)));
        if (!f)
            throw FormatError(path + ": truncated PFM payload");
        if (scale > 0) // big-endian payload
            for (float &v : row) {
                uint32_t u;
                std::memcpy(&u, &v, 4);
                u = __builtin_bswap32(u);
                std::memcpy(&v, &u, 4);
            }
        std::copy(row.begin(), row.end(),
                  data.begin() + size_t(y) * size_t(w) * 3);
    }
}

} // namespace

LinearImage load_pfm(const std::string &path) {
    int w, h;
    std::vector<float> data;
    load_pfm_raw(path, w, h, data);
    LinearImage img(w, h);
    img.data() = std::move(data);
    return img;
}

IlluminationMap load_pfm_map(const std::string &path) {
    int w, h;
    std::vector<float> data;
    load_pfm_raw(path, w, h, data);
    IlluminationMap map(w, h);
    map.data() = std::move(data);
    return map;
}

void save_pfm(const std::string &path, const Raster3 &img) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot write " + path);
    f << "PF\n" << img.width() << " " << img.height() << "\n-1.0\n";
    for (int y = img.height() - 1; y >= 0; --y)
        f.write(reinterpret_cast<const char *>(
                    img.data().data() + size_t(y) * size_t(img.width()) * 3),
                std::streamsize(size_t(img.width()) * 3 * sizeof(float)));
    if (!f)
        throw IoError("short write to " + path);
}

namespace {

constexpr char kPmapMagic[4] = {'P', 'M', 'A', 'P'};

void put_u32(std::ostream &os, uint32_t v) {
    uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                    uint8_t(v >> 24)};
    os.write(reinterpret_cast<const char *>(b), 4);
}

uint32_t get_u32(std::istream &is) {
    uint8_t b[4];
    is.read(reinterpret_cast<char *>(b), 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
           uint32_t(b[3]) << 24;
}

} // namespace

ProbabilityMap load_probability_map(const std::string &path,
                                    size_t *repaired) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kPmapMagic, 4) != 0)
        throw FormatError(path + ": not a probability map");
    uint32_t version = get_u32(f);
    if (version != 1)
        throw FormatError(path + ": unsupported version " +
                          std::to_string(version));
    uint32_t w = get_u32(f), h = get_u32(f), n = get_u32(f);
    if (!f || w == 0 || h == 0 || n == 0 || w > (1u << 20) || h > (1u << 20) ||
        n > 1024)
        throw FormatError(path + ": bad header");
    ProbabilityMap p(static_cast<int>(w), static_cast<int>(h),
                     static_cast<int>(n));
    f.read(reinterpret_cast<char *>(p.data.data()),
           std::streamsize(p.data.size() * sizeof(float)));
    if (!f)
        throw FormatError(path + ": truncated payload");
    size_t fixed = repair_simplex(p, 1e-3);
    if (repaired)
        *repaired = fixed;
    return p;
}

void save_probability_map(const std::string &path, const ProbabilityMap &p) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot write " + path);
    f.write(kPmapMagic, 4);
    put_u32(f, 1);
    put_u32(f, uint32_t(p.width));
    put_u32(f, uint32_t(p.height));
    put_u32(f, uint32_t(p.n));
    f.write(reinterpret_cast<const char *>(p.data.data()),
            std::streamsize(p.data.size() * sizeof(float)));
    if (!f)
        throw IoError("short write to " + path);
}

void save_seed_set_json(const std::string &path, const SeedSet &seeds) {
    json doc;
    doc["schema"] = 1;
    doc["width"] = seeds.width;
    doc["height"] = seeds.height;
    doc["illuminants"] = json::array();
    for (const auto &g : seeds.groups) {
        json e;
        e["color"] = {g.color.r, g.color.g, g.color.b};
        json pts = json::array();
        for (const auto &p : g.points)
            pts.push_back({p.x, p.y});
        e["points"] = std::move(pts);
        doc["illuminants"].push_back(std::move(e));
    }
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot write " + path);
    f << doc.dump(2) << "\n";
}

SeedSet load_seed_set_json(const std::string &path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception &e) {
        throw FormatError(path + ": " + e.what());
    }
    SeedSet seeds;
    try {
        seeds.width = doc.at("width").get<int>();
        seeds.height = doc.at("height").get<int>();
        for (const auto &e : doc.at("illuminants")) {
            SeedGroup g;
            g.color = {e.at("color").at(0).get<double>(),
                       e.at("color").at(1).get<double>(),
                       e.at("color").at(2).get<double>()};
            for (const auto &p : e.at("points"))
                g.points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
            seeds.groups.push_back(std::move(g));
        }
    } catch (const json::exception &e) {
        throw FormatError(path + ": " + e.what());
    }
    seeds.validate();
    return seeds;
}

std::vector<Illuminant> load_pool_json(const std::string &path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception &e) {
        throw FormatError(path + ": " + e.what());
    }
    if (!doc.is_array() || doc.empty())
        throw FormatError(path + ": expected a non-empty JSON array of triples");
    std::vector<Illuminant> pool;
    for (const auto &e : doc) {
        if (!e.is_array() || e.size() != 3)
            throw FormatError(path + ": pool entry is not an RGB triple");
        Illuminant c{e.at(0).get<double>(), e.at(1).get<double>(),
                     e.at(2).get<double>()};
        pool.push_back(c.normalized());
    }
    return pool;
}

void save_pool_json(const std::string &path,
                    const std::vector<Illuminant> &pool) {
    json doc = json::array();
    for (const auto &c : pool)
        doc.push_back({c.r, c.g, c.b});
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot write " + path);
    f << doc.dump(2) << "\n";
}

} // namespace micc::io
