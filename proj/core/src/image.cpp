#include "adapedit/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adapedit/errors.hpp"

namespace adapedit {

namespace {

void png_append(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

void png_pull(png_structp png, png_bytep data, png_size_t len) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + len > cur->bytes.size()) png_error(png, "truncated PNG");
    std::memcpy(data, cur->bytes.data() + cur->pos, len);
    cur->pos += len;
}

void png_warn(png_structp, png_const_charp) {}

// libpng reports errors by longjmp; every object with a destructor is
// created before the setjmp point in the callers below.
bool write_png_rows(png_structp png, png_infop info, const Image& img, std::vector<std::uint8_t>* out) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_set_write_fn(png, out, png_append, png_flush_noop);
    png_set_IHDR(png, info, img.width, img.height, 8, img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 9);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    for (std::uint32_t y = 0; y < img.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * stride));
    }
    png_write_end(png, nullptr);
    return true;
}

bool read_png_header(png_structp png, png_infop info, ReadCursor* cursor, Image* img) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_set_read_fn(png, cursor, png_pull);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    img->width = png_get_image_width(png, info);
    img->height = png_get_image_height(png, info);
    img->channels = png_get_channels(png, info);
    return true;
}

bool read_png_body(png_structp png, png_bytepp rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    return true;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw ContractError("encode_png: channels must be 1 or 3");
    if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * img.channels) {
        throw DimensionError("encode_png: pixel buffer size mismatch");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
    if (!png) throw Error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    const bool ok = info != nullptr && write_png_rows(png, info, img, &out);
    png_destroy_write_struct(&png, &info);
    if (!ok) throw Error("png: encoding failed");
    return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    if (!is_png(bytes)) throw ProtocolError("decode_png: missing PNG signature");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
    if (!png) throw Error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{bytes, 0};
    Image img;
    bool ok = info != nullptr && read_png_header(png, info, &cursor, &img);
    if (ok) {
        const std::size_t stride = png_get_rowbytes(png, info);
        img.pixels.resize(stride * img.height);
        std::vector<png_bytep> rows(img.height);
        for (std::uint32_t y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + y * stride;
        ok = read_png_body(png, rows.data());
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!ok) throw ProtocolError("png: malformed image data");
    return img;
}

bool is_png(std::span<const std::uint8_t> bytes) noexcept {
    static constexpr std::uint8_t kMagic[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return bytes.size() >= 8 && std::equal(kMagic, kMagic + 8, bytes.begin());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("short write to " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Image heatmap(std::span<const float> values, Grid grid) {
    if (values.size() != grid.pixels()) throw DimensionError("heatmap: value count does not match grid");
    Image img{static_cast<std::uint32_t>(grid.width), static_cast<std::uint32_t>(grid.height), 1, {}};
    img.pixels.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float v = std::clamp(values[i], 0.0f, 1.0f);
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return img;
}

double image_l2(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        throw DimensionError("image_l2: image shapes differ");
    }
    if (a.pixels.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = (static_cast<double>(a.pixels[i]) - b.pixels[i]) / 255.0;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.pixels.size()));
}

}  // namespace adapedit
