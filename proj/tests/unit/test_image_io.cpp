#include <doctest.h>

#include "fixtures.hpp"

#include <flarekit/error.hpp>
#include <flarekit/image_io.hpp>

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

using namespace flarekit;
using flarekit::testing::TempDir;

namespace {

void put32(std::string& s, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void chunk(std::string& png, const char* type, const std::string& data) {
    put32(png, static_cast<std::uint32_t>(data.size()));
    std::string body = std::string(type, 4) + data;
    png += body;
    put32(png, static_cast<std::uint32_t>(crc32(0, reinterpret_cast<const Bytef*>(body.data()), body.size())));
}

// Minimal PNG encoder (filter 0 on every row), independent of the library.
void write_raw_png(const std::filesystem::path& path, int w, int h, int color_type, int depth,
                   const std::vector<std::uint16_t>& samples) {
    const int channels = color_type == 0 ? 1 : color_type == 4 ? 2 : color_type == 2 ? 3 : 4;
    std::string raw;
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        for (int i = 0; i < w * channels; ++i) {
            const std::uint16_t v = samples[static_cast<std::size_t>(y) * w * channels + i];
            if (depth == 16) raw.push_back(static_cast<char>(v >> 8));
            raw.push_back(static_cast<char>(v & 0xff));
        }
    }
    uLongf len = compressBound(raw.size());
    std::string z(len, '\0');
    compress(reinterpret_cast<Bytef*>(z.data()), &len, reinterpret_cast<const Bytef*>(raw.data()), raw.size());
    z.resize(len);
    std::string png = "\x89PNG\r\n\x1a\n";
    std::string ihdr;
    put32(ihdr, w);
    put32(ihdr, h);
    ihdr += {static_cast<char>(depth), static_cast<char>(color_type), 0, 0, 0};
    chunk(png, "IHDR", ihdr);
    chunk(png, "IDAT", z);
    chunk(png, "IEND", "");
    std::ofstream(path, std::ios::binary) << png;
}

Image quantised(int w, int h, int levels, std::uint64_t seed) {
    Image img(w, h, Domain::encoded(2.2));
    Rng rng(seed);
    for (float& v : img.samples()) {
        v = static_cast<float>(static_cast<int>(rng.uniform(0.0, levels + 1.0)) / static_cast<double>(levels));
    }
    return img;
}

} // namespace

TEST_CASE("16-bit PNG round trip is lossless") {
    TempDir dir;
    const Image img = quantised(37, 21, 65535, 1);
    save_image(dir / "a.png", img, ImageFormat::Png16);
    const Image back = load_image(dir / "a.png");
    CHECK(back.domain() == Domain::encoded(kNominalGamma));
    CHECK(testing::same_samples(back, img));
}

TEST_CASE("8-bit PNG round trip of 8-bit values") {
    TempDir dir;
    const Image img = quantised(9, 5, 255, 2);
    save_image(dir / "a.png", img, ImageFormat::Png8);
    CHECK(testing::same_samples(load_image(dir / "a.png"), img));
}

TEST_CASE("PNG writes clamp and round") {
    TempDir dir;
    Image img(3, 1, Domain::encoded(2.2));
    img.at(0, 0, 0) = 1.7f;
    img.at(1, 0, 0) = -0.2f;
    img.at(2, 0, 0) = 0.5f;
    save_image(dir / "c.png", img, ImageFormat::Png8);
    const Image back = load_image(dir / "c.png");
    CHECK(back.at(0, 0, 0) == 1.0f);
    CHECK(back.at(1, 0, 0) == 0.0f);
    CHECK(back.at(2, 0, 0) == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("PNG gamma tag follows the caller") {
    TempDir dir;
    save_image(dir / "g.png", quantised(4, 4, 255, 3));
    CHECK(load_image(dir / "g.png", 1.8).domain() == Domain::encoded(1.8));
}

TEST_CASE("linear images cannot be written as PNG") {
    TempDir dir;
    CHECK_THROWS_AS(save_image(dir / "l.png", Image(2, 2, Domain::linear())), DomainError);
}

TEST_CASE("PFM round trip is lossless in both domains") {
    TempDir dir;
    const Image lin = testing::random_image(13, 11, Domain::linear(), 4, 0.0, 50.0);
    save_image(dir / "l.pfm", lin);
    const Image l2 = load_image(dir / "l.pfm");
    CHECK(l2.domain().is_linear());
    CHECK(testing::same_samples(l2, lin));
    const Image enc = testing::random_image(13, 11, Domain::encoded(2.0), 5);
    save_image(dir / "e.pfm", enc);
    const Image e2 = load_image(dir / "e.pfm");
    CHECK(e2.domain() == Domain::encoded(2.0));
    CHECK(testing::same_samples(e2, enc));
    CHECK_THROWS_AS(save_image(dir / "x.pfm", Image(2, 2, Domain::encoded(1.0))), DomainError);
}

TEST_CASE("reads a hand-written big-endian PFM") {
    TempDir dir;
    // 2x1, rows stored bottom to top; one row here
    std::string data = "PF\n2 1\n1.0\n";
    const float px[6] = {0.5f, 1.5f, 2.5f, 3.0f, 4.0f, 8.0f};
    for (float v : px) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        for (int i = 3; i >= 0; --i) data.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
    std::ofstream(dir / "b.pfm", std::ios::binary) << data;
    const Image img = load_image(dir / "b.pfm");
    CHECK(img.domain().is_linear());
    CHECK(img.at(0, 0, 1) == 1.5f);
    CHECK(img.at(1, 0, 2) == 8.0f);
}

TEST_CASE("PFM rows are stored bottom to top") {
    TempDir dir;
    Image img(1, 2, Domain::linear());
    img.at(0, 0, 0) = 7.0f;
    save_image(dir / "r.pfm", img);
    std::ifstream in(dir / "r.pfm", std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    float last_row_first;
    std::memcpy(&last_row_first, all.data() + all.size() - 12, 4);
    CHECK(last_row_first == 7.0f);
}

TEST_CASE("decodes externally encoded PNG variants") {
    TempDir dir;
    write_raw_png(dir / "gray8.png", 2, 2, 0, 8, {0, 255, 51, 102});
    const Image g = load_image(dir / "gray8.png");
    CHECK(g.at(1, 0, 0) == 1.0f);
    CHECK(g.at(0, 1, 2) == doctest::Approx(0.2));
    write_raw_png(dir / "rgba16.png", 1, 1, 6, 16, {65535, 0, 32768, 1234});
    const Image c = load_image(dir / "rgba16.png");
    CHECK(c.at(0, 0, 0) == 1.0f);
    CHECK(c.at(0, 0, 1) == 0.0f);
    CHECK(c.at(0, 0, 2) == doctest::Approx(32768.0 / 65535.0));
    write_raw_png(dir / "ga8.png", 1, 1, 4, 8, {200, 17});
    CHECK(load_image(dir / "ga8.png").at(0, 0, 1) == doctest::Approx(200.0 / 255.0));
}

TEST_CASE("mask round trip") {
    TempDir dir;
    Mask m(7, 5);
    m.set(1, 2, true);
    m.set(6, 4, true);
    save_mask(dir / "m.png", m);
    CHECK(load_mask(dir / "m.png") == m);
}

TEST_CASE("I/O errors") {
    TempDir dir;
    CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
    CHECK_THROWS_AS(format_from_extension("x.jpg"), FormatError);
    std::ofstream(dir / "bad.png") << "not a png";
    CHECK_THROWS_AS(load_image(dir / "bad.png"), FormatError);
    std::ofstream(dir / "gray.pfm") << "Pf\n1 1\n-1\n";
    CHECK_THROWS_AS(load_image(dir / "gray.pfm"), FormatError);
    std::ofstream(dir / "short.pfm") << "PF\n4 4\n-1\nabc";
    CHECK_THROWS_AS(load_image(dir / "short.pfm"), IoError);
    CHECK(format_from_extension("a/B.PNG") == ImageFormat::Png16);
}
