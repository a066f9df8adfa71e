#include "flarekit/image_io.hpp"

#include "flarekit/error.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace flarekit {

namespace {

constexpr int kMaxDimension = 1 << 16;

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    *buf = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct RawPng {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    int channels = 3;
    std::vector<std::uint16_t> samples;  // channels per pixel, full-scale per bit depth
};

// libpng uses setjmp/longjmp; keep everything with a destructor out of the
// frame that calls setjmp.
bool read_png_raw(std::FILE* fp, RawPng& out, std::string& err) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (!png) {
        err = "png_create_read_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        err = "png_create_info_struct failed";
        return false;
    }
    png_bytep* rows = nullptr;
    unsigned char* pixels = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        std::free(rows);
        std::free(pixels);
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_swap(png);  // host-order little endian words
    png_read_update_info(png, info);

    const int out_depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);

    if (w == 0 || h == 0 || w > kMaxDimension || h > kMaxDimension) {
        err = "png dimensions out of range";
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }

    pixels = static_cast<unsigned char*>(std::malloc(rowbytes * h));
    rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * h));
    if (!pixels || !rows) {
        std::free(rows);
        std::free(pixels);
        err = "out of memory";
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels + y * rowbytes;
    png_read_image(png, rows);
    png_read_end(png, nullptr);

    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.bit_depth = out_depth;
    out.channels = channels;
    out.samples.resize(static_cast<std::size_t>(w) * h * channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(w) * channels; ++i) {
            std::uint16_t v;
            if (out_depth == 16) {
                std::memcpy(&v, rows[y] + 2 * i, 2);
            } else {
                v = rows[y][i];
            }
            out.samples[y * static_cast<std::size_t>(w) * channels + i] = v;
        }
    }
    std::free(rows);
    std::free(pixels);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

bool write_png_raw(std::FILE* fp, int width, int height, int channels, int bit_depth,
                   const std::vector<std::uint16_t>& samples, std::string& err) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (!png) {
        err = "png_create_write_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        err = "png_create_info_struct failed";
        return false;
    }
    unsigned char* row = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        std::free(row);
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
    const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * bytes_per_sample;
    row = static_cast<unsigned char*>(std::malloc(rowbytes));
    if (!row) {
        err = "out of memory";
        png_destroy_write_struct(&png, &info);
        return false;
    }
    for (int y = 0; y < height; ++y) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(width) * channels; ++i) {
            const std::uint16_t v = samples[static_cast<std::size_t>(y) * width * channels + i];
            if (bit_depth == 16) {
                row[2 * i] = static_cast<unsigned char>(v >> 8);  // PNG is big endian
                row[2 * i + 1] = static_cast<unsigned char>(v & 0xFF);
            } else {
                row[i] = static_cast<unsigned char>(v);
            }
        }
        png_write_row(png, row);
    }
    png_write_end(png, nullptr);
    std::free(row);
    png_destroy_write_struct(&png, &info);
    return true;
}

RawPng read_png(const std::filesystem::path& path) {
    auto fp = open_file(path, "rb");
    unsigned char sig[8] = {};
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw FormatError(path.string() + " is not a PNG file");
    }
    std::rewind(fp.get());
    RawPng raw;
    std::string err;
    if (!read_png_raw(fp.get(), raw, err)) throw IoError("failed to decode " + path.string() + ": " + err);
    return raw;
}

void write_png(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
               const std::vector<std::uint16_t>& samples) {
    auto fp = open_file(path, "wb");
    std::string err;
    if (!write_png_raw(fp.get(), width, height, channels, bit_depth, samples, err)) {
        throw IoError("failed to encode " + path.string() + ": " + err);
    }
    if (std::fflush(fp.get()) != 0) throw IoError("short write to " + path.string());
}

Image load_png(const std::filesystem::path& path, double png_gamma) {
    const RawPng raw = read_png(path);
    const double full = raw.bit_depth == 16 ? 65535.0 : 255.0;
    Image img(raw.width, raw.height, Domain::encoded(png_gamma));
    auto dst = img.samples();
    const int color_channels = raw.channels >= 3 ? 3 : 1;
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        for (int c = 0; c < Image::kChannels; ++c) {
            const int src_c = color_channels == 3 ? c : 0;
            dst[p * 3 + c] = static_cast<float>(raw.samples[p * raw.channels + src_c] / full);
        }
    }
    return img;
}

void save_png(const std::filesystem::path& path, const Image& img, int bit_depth) {
    if (img.domain().is_linear()) {
        throw DomainError("PNG output requires an encoded image; encode or write PFM instead");
    }
    const double full = bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<std::uint16_t> samples(img.sample_count());
    auto src = img.samples();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = std::clamp(static_cast<double>(src[i]), 0.0, 1.0);
        samples[i] = static_cast<std::uint16_t>(std::lround(v * full));
    }
    write_png(path, img.width(), img.height(), 3, bit_depth, samples);
}

// --- PFM --------------------------------------------------------------------

std::string next_token(std::istream& in) {
    std::string tok;
    in >> tok;
    return tok;
}

Image load_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string magic = next_token(in);
    if (magic == "Pf") throw FormatError(path.string() + ": grayscale PFM is not supported");
    if (magic != "PF") throw FormatError(path.string() + " is not a colour PFM file");
    long long w = 0, h = 0;
    double scale = 0.0;
    try {
        w = std::stoll(next_token(in));
        h = std::stoll(next_token(in));
        scale = std::stod(next_token(in));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed PFM header");
    }
    if (w < 1 || h < 1 || w > kMaxDimension || h > kMaxDimension) {
        throw IoError(path.string() + ": PFM dimensions out of range");
    }
    if (scale == 0.0 || !std::isfinite(scale)) throw IoError(path.string() + ": invalid PFM scale");
    in.get();  // single whitespace byte after the header

    const bool little = scale < 0.0;
    const double magnitude = std::abs(scale);
    const Domain domain = magnitude == 1.0 ? Domain::linear() : Domain::encoded(magnitude);

    Image img(static_cast<int>(w), static_cast<int>(h), domain);
    std::vector<std::uint32_t> row(static_cast<std::size_t>(w) * 3);
    for (long long y = h - 1; y >= 0; --y) {  // PFM rows run bottom to top
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
        if (!in) throw IoError(path.string() + ": truncated PFM data");
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::uint32_t bits = row[i];
            if (little != (std::endian::native == std::endian::little)) bits = __builtin_bswap32(bits);
            float v;
            std::memcpy(&v, &bits, 4);
            img.samples()[static_cast<std::size_t>(y) * w * 3 + i] = v;
        }
    }
    return img;
}

void save_pfm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    double magnitude = 1.0;
    if (img.domain().is_encoded()) {
        magnitude = img.domain().gamma;
        if (magnitude == 1.0) {
            throw DomainError("PFM cannot distinguish Encoded(1.0) from Linear");
        }
    }
    std::ostringstream header;
    header << "PF\n" << img.width() << ' ' << img.height() << '\n';
    header.precision(17);
    header << -magnitude << '\n';
    out << header.str();
    std::vector<std::uint32_t> row(static_cast<std::size_t>(img.width()) * 3);
    for (int y = img.height() - 1; y >= 0; --y) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            const float v = img.samples()[static_cast<std::size_t>(y) * img.width() * 3 + i];
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
            row[i] = bits;
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    }
    if (!out) throw IoError("short write to " + path.string());
}

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

} // namespace

ImageFormat format_from_extension(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return ImageFormat::Png16;
    if (ext == ".pfm") return ImageFormat::Pfm;
    throw FormatError("unsupported image extension '" + ext + "'");
}

Image load_image(const std::filesystem::path& path, double png_gamma) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return load_png(path, png_gamma);
    if (ext == ".pfm") return load_pfm(path);
    throw FormatError("unsupported image extension '" + ext + "'");
}

void save_image(const std::filesystem::path& path, const Image& img, ImageFormat format) {
    switch (format) {
    case ImageFormat::Png8: return save_png(path, img, 8);
    case ImageFormat::Png16: return save_png(path, img, 16);
    case ImageFormat::Pfm: return save_pfm(path, img);
    }
}

void save_image(const std::filesystem::path& path, const Image& img) {
    save_image(path, img, format_from_extension(path));
}

void save_mask(const std::filesystem::path& path, const Mask& mask) {
    std::vector<std::uint16_t> samples(mask.pixel_count());
    auto bits = mask.bits();
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = bits[i] ? 255 : 0;
    write_png(path, mask.width(), mask.height(), 1, 8, samples);
}

Mask load_mask(const std::filesystem::path& path) {
    const RawPng raw = read_png(path);
    const std::uint16_t half = raw.bit_depth == 16 ? 32767 : 127;
    Mask mask(raw.width, raw.height);
    auto bits = mask.bits();
    for (std::size_t p = 0; p < bits.size(); ++p) bits[p] = raw.samples[p * raw.channels] > half ? 1 : 0;
    return mask;
}

} // namespace flarekit
