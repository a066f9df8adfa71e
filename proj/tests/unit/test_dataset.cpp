#include <doctest.h>

#include "fixtures.hpp"

#include <flarekit/dataset.hpp>
#include <flarekit/error.hpp>
#include <flarekit/image_io.hpp>
#include <flarekit/scene.hpp>

#include <cmath>
#include <fstream>

using namespace flarekit;
using flarekit::testing::TempDir;
namespace fs = std::filesystem;

namespace {

Scene small_scene(std::uint64_t seed) {
    SceneConfig sc;
    sc.width = 160;
    sc.height = 120;
    sc.light_radius = {4.0, 6.0};
    sc.edge_margin = 10.0;
    sc.min_center_distance = 20.0;
    Rng rng(seed);
    return render_scene(sc, rng);
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

double max_abs_diff(const Image& a, const Image& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.sample_count(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.samples()[i]) - b.samples()[i]));
    }
    return m;
}

} // namespace

TEST_CASE("crc32 check value") {
    TempDir dir;
    write_text(dir / "c.txt", "123456789");
    CHECK(file_crc32(dir / "c.txt") == 0xCBF43926u);
    write_text(dir / "e.txt", "");
    CHECK(file_crc32(dir / "e.txt") == 0u);
}

TEST_CASE("scan picks the middle and darkest shots") {
    TempDir dir;
    write_bracket_group(dir / "g1", small_scene(1), {-6, -3, 0, 3, 6});
    write_bracket_group(dir / "g0", small_scene(2), {0, -2, -4, -6, 2});
    write_bracket_group(dir / "short", small_scene(3), {0, -6});
    const ScanResult r = scan_bracket_groups(dir.path());
    REQUIRE(r.groups.size() == 2);
    CHECK(r.groups[0].id == "g0");
    CHECK(r.groups[1].id == "g1");
    // sorted EVs -6 -4 -2 0 2: normal = -2, low = -6
    CHECK(*r.groups[0].normal_ev == -2.0);
    CHECK(*r.groups[0].low_ev == -6.0);
    CHECK(r.groups[1].normal.filename() == "shot_2.png");
    CHECK(r.groups[1].low.filename() == "shot_0.png");
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].group == "short");

    const BracketPair p = load_bracket_pair(r.groups[1]);
    CHECK(p.ev_gap == 6.0);
    CHECK(p.normal.width() == 160);
    CHECK(p.low.domain() == Domain::encoded(kNominalGamma));
}

TEST_CASE("exposure sidecar overrides file-name order") {
    TempDir dir;
    const Scene s = small_scene(4);
    fs::create_directories(dir / "g");
    const double evs[3] = {0.0, -6.0, 3.0};
    const char* names[3] = {"a.png", "b.png", "c.png"};
    for (int i = 0; i < 3; ++i) save_image(dir / "g" / names[i], expose(s, evs[i]));
    write_text(dir / "g" / "exposures.txt", "# file ev\na.png 0\nb.png -6\nc.png 3\n");
    const ScanResult r = scan_bracket_groups(dir.path(), 3);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].low.filename() == "b.png");
    CHECK(r.groups[0].normal.filename() == "a.png");
    CHECK(r.groups[0].shots.back().filename() == "c.png");

    write_text(dir / "g" / "exposures.txt", "a.png 0\nb.png -6\n");
    CHECK_THROWS_AS(scan_bracket_groups(dir.path(), 3), FormatError);
}

TEST_CASE("without a sidecar, names order the shots") {
    TempDir dir;
    const Scene s = small_scene(5);
    fs::create_directories(dir / "g");
    save_image(dir / "g" / "1.png", expose(s, -6));
    save_image(dir / "g" / "2.png", expose(s, -3));
    save_image(dir / "g" / "3.png", expose(s, 0));
    const ScanResult r = scan_bracket_groups(dir.path(), 3);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].normal.filename() == "2.png");
    CHECK_FALSE(r.groups[0].normal_ev.has_value());
    CHECK(load_bracket_pair(r.groups[0]).ev_gap == 0.0);
}

TEST_CASE("scan errors") {
    TempDir dir;
    CHECK_THROWS_AS(scan_bracket_groups(dir / "nope"), IoError);
    CHECK_THROWS_AS(scan_bracket_groups(dir.path(), 0), std::invalid_argument);
    CHECK(scan_bracket_groups(dir.path()).groups.empty());
}

TEST_CASE("manifest text round trip") {
    DatasetManifest m;
    m.add({"000000", "g1", "train", {1, 18446744073709551615ull}, {{"corrupted", "000000/corrupted.png", 0xdeadbeef}}});
    m.add({"000001", "g2", "test", {7}, {}});
    const std::string text = format_manifest(m);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.find("\"deadbeef\"") != std::string::npos);
    CHECK(parse_manifest(text) == m);
    CHECK_THROWS_AS(m.add({"000000", "", "", {}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_manifest("{\"id\":1}"), FormatError);
    CHECK_THROWS_AS(parse_manifest(text + text), FormatError);
    CHECK(parse_manifest("").records.empty());
}

TEST_CASE("triplet write, verify and read back") {
    TempDir dir;
    const BracketPair pair = testing::scene_pair(8, 256);
    const SynthesisConfig cfg = testing::square_config(256);
    const FlareTriplet t = synthesize_triplet(pair, cfg, 99);
    ManifestRecord rec = write_triplet(dir.path(), "000000", t, "scene8");
    rec.split = "train";
    CHECK(rec.files.size() == 6);
    DatasetManifest m;
    m.add(rec);
    write_manifest(dir / "manifest.jsonl", m);
    const DatasetManifest back = read_manifest(dir / "manifest.jsonl");
    CHECK(back == m);
    CHECK(verify_manifest(back, dir.path()).empty());

    const StoredTriplet s = read_triplet(dir / "000000");
    CHECK(s.triplet.params == t.params);
    CHECK(s.triplet.mask == t.mask);
    CHECK(s.triplet.corrupted.domain() == Domain::encoded(t.params.gamma));
    CHECK(max_abs_diff(s.triplet.corrupted, t.corrupted) <= 0.5 / 65535.0 + 1e-7);
    CHECK(max_abs_diff(s.triplet.flare, t.flare) <= 0.5 / 65535.0 + 1e-7);

    // tamper with one file and remove another
    write_text(dir / "000000" / "params.json", "{}");
    fs::remove(dir / "000000" / "mask.png");
    const auto problems = verify_manifest(back, dir.path());
    REQUIRE(problems.size() == 2);
    CHECK(problems[0].find("missing 000000/mask.png") != std::string::npos);
    CHECK(problems[1].find("checksum mismatch for 000000/params.json") != std::string::npos);
}
