#include "flarekit/dataset.hpp"

#include "flarekit/error.hpp"
#include "flarekit/image_io.hpp"
#include "flarekit/prior.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace flarekit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pfm";
}

std::map<std::string, double> read_exposure_sidecar(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<std::string, double> evs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string name;
        double ev = 0.0;
        if (!(ls >> name)) continue;
        if (!(ls >> ev)) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected '<file> <ev>'");
        }
        evs[name] = ev;
    }
    return evs;
}

void require_readable(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot read " + p.string());
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

std::uint32_t parse_hex32(const std::string& s) {
    if (s.size() != 8 || s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
        throw FormatError("manifest: bad crc32 '" + s + "'");
    }
    return static_cast<std::uint32_t>(std::stoul(s, nullptr, 16));
}

} // namespace

ScanResult scan_bracket_groups(const fs::path& root, std::size_t group_size) {
    if (group_size == 0) throw std::invalid_argument("group_size must be positive");
    if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
    ScanResult result;

    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());

    for (const auto& dir : dirs) {
        const std::string id = dir.filename().string();
        std::vector<fs::path> shots;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_regular_file() && is_image_file(e.path())) shots.push_back(e.path());
        }
        std::sort(shots.begin(), shots.end());

        if (shots.size() != group_size) {
            result.warnings.push_back({id, "expected " + std::to_string(group_size) + " shots, found " +
                                               std::to_string(shots.size()) + "; skipped"});
            continue;
        }

        BracketGroup g;
        g.id = id;
        const fs::path sidecar = dir / kExposureSidecar;
        std::vector<double> evs;
        if (fs::exists(sidecar)) {
            const auto table = read_exposure_sidecar(sidecar);
            std::vector<std::pair<double, fs::path>> keyed;
            for (const auto& s : shots) {
                const auto it = table.find(s.filename().string());
                if (it == table.end()) {
                    throw FormatError(sidecar.string() + ": no exposure for " + s.filename().string());
                }
                keyed.emplace_back(it->second, s);
            }
            std::stable_sort(keyed.begin(), keyed.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            shots.clear();
            for (const auto& [ev, p] : keyed) {
                evs.push_back(ev);
                shots.push_back(p);
            }
        }
        const std::size_t normal_idx = group_size / 2;
        g.shots = shots;
        g.normal = shots[normal_idx];
        g.low = shots.front();
        if (!evs.empty()) {
            g.normal_ev = evs[normal_idx];
            g.low_ev = evs.front();
        }
        require_readable(g.normal);
        require_readable(g.low);
        result.groups.push_back(std::move(g));
    }
    return result;
}

BracketPair load_bracket_pair(const BracketGroup& group, double png_gamma) {
    BracketPair pair;
    pair.id = group.id;
    pair.normal = load_image(group.normal, png_gamma);
    pair.low = load_image(group.low, png_gamma);
    pair.normal_source = group.normal.filename().string();
    pair.low_source = group.low.filename().string();
    if (group.normal_ev && group.low_ev) pair.ev_gap = *group.normal_ev - *group.low_ev;
    if (!pair.normal.same_shape(pair.low)) {
        throw std::invalid_argument("bracket group " + group.id + ": exposures differ in size");
    }
    if (!pair.normal.domain().is_encoded() || !pair.low.domain().is_encoded()) {
        throw DomainError("bracket group " + group.id + ": exposures must be Encoded");
    }
    return pair;
}

// --- manifest -----------------------------------------------------------------

void DatasetManifest::add(ManifestRecord record) {
    for (const auto& r : records) {
        if (r.id == record.id) throw std::invalid_argument("manifest: duplicate id '" + record.id + "'");
    }
    records.push_back(std::move(record));
}

std::string format_manifest(const DatasetManifest& manifest) {
    std::string out;
    for (const auto& r : manifest.records) {
        json j;
        j["id"] = r.id;
        j["source"] = r.source;
        j["split"] = r.split;
        j["seeds"] = r.seeds;
        j["files"] = json::array();
        for (const auto& f : r.files) {
            j["files"].push_back({{"role", f.role}, {"path", f.path}, {"crc32", hex32(f.crc32)}});
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

DatasetManifest parse_manifest(std::string_view text) {
    DatasetManifest m;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            ManifestRecord r;
            r.id = j.at("id").get<std::string>();
            r.source = j.at("source").get<std::string>();
            r.split = j.at("split").get<std::string>();
            r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
            for (const auto& f : j.at("files")) {
                r.files.push_back({f.at("role").get<std::string>(), f.at("path").get<std::string>(),
                                   parse_hex32(f.at("crc32").get<std::string>())});
            }
            m.add(std::move(r));
        } catch (const json::exception& e) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << format_manifest(manifest);
    if (!out) throw IoError("short write to " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

std::uint32_t file_crc32(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto n = in.gcount();
        if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::string> verify_manifest(const DatasetManifest& manifest, const fs::path& root) {
    std::vector<std::string> problems;
    std::set<std::string> ids;
    for (const auto& r : manifest.records) {
        if (!ids.insert(r.id).second) problems.push_back(r.id + ": duplicate id");
        for (const auto& f : r.files) {
            const fs::path p = root / f.path;
            if (!fs::exists(p)) {
                problems.push_back(r.id + ": missing " + f.path);
                continue;
            }
            const std::uint32_t crc = file_crc32(p);
            if (crc != f.crc32) {
                problems.push_back(r.id + ": checksum mismatch for " + f.path + " (expected " + hex32(f.crc32) +
                                   ", found " + hex32(crc) + ")");
            }
        }
    }
    return problems;
}

// --- triplets -----------------------------------------------------------------

ManifestRecord write_triplet(const fs::path& root, const std::string& id, const FlareTriplet& t,
                             const std::string& source) {
    const fs::path dir = root / id;
    fs::create_directories(dir);
    ManifestRecord rec;
    rec.id = id;
    rec.source = source;
    rec.seeds = {t.params.seed};

    auto record = [&](const std::string& role, const std::string& name) {
        const fs::path rel = fs::path(id) / name;
        rec.files.push_back({role, rel.generic_string(), file_crc32(root / rel)});
    };

    save_image(dir / "corrupted.png", t.corrupted, ImageFormat::Png16);
    record("corrupted", "corrupted.png");
    save_image(dir / "flare_free.png", t.flare_free, ImageFormat::Png16);
    record("flare_free", "flare_free.png");
    save_image(dir / "flare.png", t.flare, ImageFormat::Png16);
    record("flare", "flare.png");
    save_mask(dir / "mask.png", t.mask);
    record("mask", "mask.png");
    save_image(dir / "prior.png", compute_prior(t.corrupted, t.center()), ImageFormat::Png16);
    record("prior", "prior.png");
    {
        std::ofstream out(dir / "params.json", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "params.json").string());
        out << params_to_json(t.params) << '\n';
        if (!out) throw IoError("short write to " + (dir / "params.json").string());
    }
    record("params", "params.json");
    return rec;
}

StoredTriplet read_triplet(const fs::path& dir) {
    std::ifstream in(dir / "params.json", std::ios::binary);
    if (!in) throw IoError("cannot open " + (dir / "params.json").string());
    std::ostringstream buf;
    buf << in.rdbuf();
    StoredTriplet s;
    s.triplet.params = params_from_json(buf.str());
    const double g = s.triplet.params.gamma;
    s.triplet.corrupted = load_image(dir / "corrupted.png", g);
    s.triplet.flare_free = load_image(dir / "flare_free.png", g);
    s.triplet.flare = load_image(dir / "flare.png", g);
    s.triplet.mask = load_mask(dir / "mask.png");
    s.prior = load_image(dir / "prior.png", g);
    return s;
}

} // namespace flarekit
