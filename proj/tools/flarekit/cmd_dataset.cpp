#include "flarekit/output.hpp"

#include <flarekit/dataset.hpp>
#include <flarekit/error.hpp>
#include <flarekit/image_io.hpp>
#include <flarekit/parallel.hpp>
#include <flarekit/prior.hpp>
#include <flarekit/synthesis.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace flarekit::cli {

namespace fs = std::filesystem;

namespace {

json group_json(const BracketGroup& g) {
    json j{{"group", g.id}, {"normal", g.normal.generic_string()}, {"low", g.low.generic_string()},
           {"shots", g.shots.size()}};
    j["normal_ev"] = g.normal_ev ? json(*g.normal_ev) : json(nullptr);
    j["low_ev"] = g.low_ev ? json(*g.low_ev) : json(nullptr);
    return j;
}

std::string item_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    return buf;
}

} // namespace

int run_scan(const RunConfig& rc) {
    const auto& o = rc.scan;
    if (o.in.empty()) throw UsageError("scan: --in is required");
    const ScanResult r = scan_bracket_groups(o.in, o.group_size);

    std::string report;
    for (const auto& g : r.groups) report += group_json(g).dump() + "\n";
    for (const auto& w : r.warnings) report += json{{"warning", w.message}, {"group", w.group}}.dump() + "\n";

    if (rc.common.json) {
        std::cout << report;
    } else {
        std::cout << "group                normal                         low\n";
        for (const auto& g : r.groups) {
            std::string line = g.id;
            line.resize(std::max<std::size_t>(line.size() + 1, 21), ' ');
            std::string normal = g.normal.filename().string();
            if (g.normal_ev) normal += " (EV " + fixed(*g.normal_ev, 1) + ")";
            normal.resize(std::max<std::size_t>(normal.size() + 1, 31), ' ');
            std::string low = g.low.filename().string();
            if (g.low_ev) low += " (EV " + fixed(*g.low_ev, 1) + ")";
            std::cout << line << normal << low << '\n';
        }
        for (const auto& w : r.warnings) std::cout << "warning: " << w.group << ": " << w.message << '\n';
        std::cout << r.groups.size() << " pair(s), " << r.warnings.size() << " group(s) skipped\n";
    }
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_text(fs::path(o.out) / "scan.jsonl", report);
        write_effective_config(o.out, rc);
    }
    return kExitOk;
}

int run_synth(const RunConfig& rc) {
    const auto& o = rc.synth;
    if (o.in.empty()) throw UsageError("synth: --in is required");
    if (o.out.empty()) throw UsageError("synth: --out is required");
    o.synthesis.validate();

    const ScanResult scan = scan_bracket_groups(o.in, o.group_size);
    for (const auto& w : scan.warnings) log(rc, 1, "skipping group " + w.group + ": " + w.message);
    if (o.count > 0 && scan.groups.empty()) throw IoError("synth: no bracket groups under " + o.in);

    const fs::path out(o.out);
    fs::create_directories(out);

    // Only the groups that items will draw from are loaded and resized.
    const std::size_t used = std::min(o.count, scan.groups.size());
    std::vector<std::optional<PreparedPair>> pairs(used);
    parallel_for(used, rc.common.threads, [&](std::size_t g) {
        pairs[g] = prepare_pair(load_bracket_pair(scan.groups[g], o.png_gamma), o.synthesis);
        log(rc, 2, "prepared " + scan.groups[g].id);
    });

    std::vector<ManifestRecord> records(o.count);
    parallel_for(o.count, rc.common.threads, [&](std::size_t i) {
        const std::size_t g = i % used;
        const std::string id = item_id(i);
        const FlareTriplet t = synthesize_triplet(*pairs[g], o.synthesis, Rng::derive(rc.common.seed, i));
        ManifestRecord rec = write_triplet(out, id, t, scan.groups[g].id);
        rec.split = (o.test_every > 0 && i % o.test_every == o.test_every - 1) ? "test" : "train";
        if (o.samples) export_samples(out / id, {build_sample(t, t.center(), id)});
        records[i] = std::move(rec);
        log(rc, 1, "wrote " + id);
    });

    DatasetManifest manifest;
    for (auto& r : records) manifest.add(std::move(r));
    write_manifest(out / "manifest.jsonl", manifest);
    write_effective_config(out, rc);

    if (rc.common.json) {
        for (const auto& r : manifest.records) {
            emit({{"id", r.id}, {"source", r.source}, {"split", r.split}, {"seed", r.seeds.at(0)}});
        }
    } else {
        std::cout << "wrote " << manifest.records.size() << " triplet(s) to " << out.generic_string() << '\n';
    }
    return kExitOk;
}

int run_prior(const RunConfig& rc) {
    const auto& o = rc.prior;
    if (o.in.empty()) throw UsageError("prior: --in is required");
    if (o.out.empty()) throw UsageError("prior: --out is required");
    const ImageFormat fmt = format_from_extension(o.out);
    const Image img = load_image(o.in, o.png_gamma);
    const OpticalCenter c = center_or_default(o.center, img.width(), img.height());
    const Image prior = compute_prior(img, c, o.gamma_p);
    fs::create_directories(provenance_dir(o.out));
    save_image(o.out, prior, fmt);
    write_effective_config(provenance_dir(o.out), rc);
    if (rc.common.json) {
        emit({{"in", o.in}, {"out", o.out}, {"center", {c.x, c.y}}, {"max", max_sample(prior)}});
    } else {
        std::cout << "prior of " << o.in << " about (" << c.x << ", " << c.y << ") -> " << o.out << '\n';
    }
    return kExitOk;
}

} // namespace flarekit::cli
