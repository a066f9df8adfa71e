#include "flarekit/output.hpp"

#include <flarekit/error.hpp>
#include <flarekit/image_io.hpp>
#include <flarekit/parallel.hpp>
#include <flarekit/removal.hpp>

#include <iostream>
#include <set>

namespace flarekit::cli {

namespace fs = std::filesystem;

namespace {

// [input | clean | flare] with a black gutter.
Image comparison_panel(const Image& input, const Image& clean, const Image& flare) {
    constexpr int kGutter = 8;
    const int w = input.width();
    const int h = input.height();
    Image panel(3 * w + 2 * kGutter, h, input.domain());
    const Image* parts[] = {&input, &clean, &flare};
    for (int k = 0; k < 3; ++k) {
        const int x0 = k * (w + kGutter);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) panel.at(x0 + x, y, c) = parts[k]->at(x, y, c);
    }
    return panel;
}

json fit_json(const FitResult& f) {
    return {{"found", f.found},
            {"refined", f.refined},
            {"gains", f.params.gains},
            {"blur_sigma", f.params.blur_sigma},
            {"dx", f.params.dx},
            {"dy", f.params.dy},
            {"objective", f.objective},
            {"null_objective", f.null_objective},
            {"proposal_pixels", f.proposal.count()}};
}

// One output directory per input; several inputs get a subdirectory each,
// named after the file stem, or after the parent directory when stems
// repeat (as in <tree>/<id>/corrupted.png).
std::vector<fs::path> output_dirs(const std::vector<std::string>& inputs, const fs::path& root) {
    if (inputs.size() == 1) return {root};
    auto unique = [&](auto key) {
        std::set<std::string> seen;
        for (const auto& in : inputs) {
            if (!seen.insert(key(fs::path(in))).second) return false;
        }
        return true;
    };
    auto stem = [](const fs::path& p) { return p.stem().string(); };
    auto parent = [](const fs::path& p) { return fs::absolute(p).parent_path().filename().string(); };
    std::vector<fs::path> dirs;
    if (unique(stem)) {
        for (const auto& in : inputs) dirs.push_back(root / stem(in));
    } else if (unique(parent)) {
        for (const auto& in : inputs) dirs.push_back(root / parent(in));
    } else {
        for (std::size_t i = 0; i < inputs.size(); ++i) dirs.push_back(root / (stem(inputs[i]) + "_" + std::to_string(i)));
    }
    return dirs;
}

} // namespace

int run_remove(const RunConfig& rc) {
    const auto& o = rc.remove;
    if (o.in.empty()) throw UsageError("remove: at least one --in image is required");
    if (o.out_dir.empty()) throw UsageError("remove: --out-dir is required");
    o.removal.validate();
    const auto dirs = output_dirs(o.in, o.out_dir);

    std::vector<json> reports(o.in.size());
    parallel_for(o.in.size(), rc.common.threads, [&](std::size_t i) {
        const Image img = load_image(o.in[i], o.png_gamma);
        const OpticalCenter c = center_or_default(o.center, img.width(), img.height());
        const RemovalResult r = remove_flare(img, c, o.removal);
        fs::create_directories(dirs[i]);
        save_image(dirs[i] / "clean.png", r.flare_free_est, ImageFormat::Png16);
        save_image(dirs[i] / "flare.png", r.flare_est, ImageFormat::Png16);
        save_image(dirs[i] / "panel.png", comparison_panel(img, r.flare_free_est, r.flare_est), ImageFormat::Png16);
        json rep{{"in", o.in[i]}, {"out", dirs[i].generic_string()}, {"center", {c.x, c.y}},
                 {"found", r.found()}, {"sources", json::array()}};
        for (const auto& f : r.fits) rep["sources"].push_back(fit_json(f));
        write_text(dirs[i] / "fit.json", rep.dump(2) + "\n");
        reports[i] = std::move(rep);
        log(rc, 1, "done " + o.in[i]);
    });
    write_effective_config(o.out_dir, rc);

    for (const auto& rep : reports) {
        if (rc.common.json) {
            emit(rep);
            continue;
        }
        std::cout << rep["in"].get<std::string>() << ": ";
        if (!rep["found"].get<bool>()) {
            std::cout << "no flare found\n";
            continue;
        }
        std::cout << '\n';
        for (const auto& s : rep["sources"]) {
            if (!s["found"].get<bool>()) continue;
            std::cout << "  sigma " << fixed(s["blur_sigma"], 4) << "  offset (" << fixed(s["dx"], 3) << ", "
                      << fixed(s["dy"], 3) << ")  gains (" << fixed(s["gains"][0], 4) << ", "
                      << fixed(s["gains"][1], 4) << ", " << fixed(s["gains"][2], 4) << ")\n";
        }
    }
    return kExitOk;
}

int run_hdr(const RunConfig& rc) {
    const auto& o = rc.hdr;
    if (o.in.empty()) throw UsageError("hdr: --in is required");
    if (o.out.empty()) throw UsageError("hdr: --out is required");
    if (format_from_extension(o.out) != ImageFormat::Pfm) throw UsageError("hdr: --out must be a .pfm file");

    const Image img = load_image(o.in, o.png_gamma);
    const OpticalCenter c = center_or_default(o.center, img.width(), img.height());
    Image flare;
    if (o.flare.empty()) {
        o.removal.validate();
        flare = remove_flare(img, c, o.removal).flare_est;
    } else {
        flare = load_image(o.flare, img.domain().gamma);
        if (!flare.same_shape(img)) throw UsageError("hdr: --flare must match the input size");
        flare.set_domain(img.domain());
    }
    const Image merged = hdr_merge(img, flare, c, o.ev_step, o.sat_threshold);
    fs::create_directories(provenance_dir(o.out));
    save_image(o.out, merged, ImageFormat::Pfm);
    write_effective_config(provenance_dir(o.out), rc);

    const std::size_t replaced = threshold_max_channel_at_least(img, o.sat_threshold).count();
    if (rc.common.json) {
        emit({{"in", o.in}, {"out", o.out}, {"replaced_pixels", replaced}, {"max", max_sample(merged)}});
    } else {
        std::cout << "replaced " << replaced << " saturated pixel(s); peak linear value " << max_sample(merged)
                  << " -> " << o.out << '\n';
    }
    return kExitOk;
}

} // namespace flarekit::cli
