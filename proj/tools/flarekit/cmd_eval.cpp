#include "flarekit/output.hpp"

#include <flarekit/error.hpp>
#include <flarekit/image_io.hpp>
#include <flarekit/parallel.hpp>
#include <flarekit/quality.hpp>

#include <algorithm>
#include <iostream>
#include <optional>

namespace flarekit::cli {

namespace fs = std::filesystem;

namespace {

struct Item {
    std::string id;
    fs::path pred;
    fs::path gt;
    std::optional<fs::path> mask;
};

bool is_image(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".png" || ext == ".pfm" || ext == ".PNG" || ext == ".PFM";
}

std::vector<Item> collect(const EvalOptions& o) {
    std::vector<Item> items;
    if (!fs::is_directory(o.gt)) throw IoError("not a directory: " + o.gt);
    if (o.gt_file.empty()) {
        // flat directories matched by file name
        for (const auto& e : fs::directory_iterator(o.gt)) {
            if (!e.is_regular_file() || !is_image(e.path())) continue;
            const std::string name = e.path().filename().string();
            Item it{e.path().stem().string(), fs::path(o.pred) / name, e.path(), std::nullopt};
            if (!o.mask.empty()) it.mask = fs::path(o.mask) / name;
            items.push_back(std::move(it));
        }
    } else {
        // trees of <id>/<file>
        const std::string pred_file = o.pred_file.empty() ? o.gt_file : o.pred_file;
        const std::string mask_root = o.mask.empty() ? o.gt : o.mask;
        for (const auto& e : fs::directory_iterator(o.gt)) {
            if (!e.is_directory() || !fs::exists(e.path() / o.gt_file)) continue;
            const std::string id = e.path().filename().string();
            Item it{id, fs::path(o.pred) / id / pred_file, e.path() / o.gt_file, std::nullopt};
            if (!o.mask_file.empty()) it.mask = fs::path(mask_root) / id / o.mask_file;
            items.push_back(std::move(it));
        }
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.id < b.id; });
    return items;
}

} // namespace

int run_eval(const RunConfig& rc) {
    const auto& o = rc.eval;
    if (o.pred.empty() || o.gt.empty()) throw UsageError("eval: --pred and --gt are required");
    if (!o.mask_file.empty() && o.gt_file.empty()) throw UsageError("eval: --mask-file needs --gt-file");
    const auto items = collect(o);

    std::vector<json> rows(items.size());
    parallel_for(items.size(), rc.common.threads, [&](std::size_t i) {
        const auto& it = items[i];
        if (!fs::exists(it.pred)) throw IoError("missing prediction " + it.pred.generic_string());
        const Image gt = load_image(it.gt, o.png_gamma);
        const Image pred = load_image(it.pred, o.png_gamma);
        if (!pred.same_shape(gt)) throw IoError("size mismatch for " + it.id);
        json row{{"id", it.id}, {"psnr", psnr(pred, gt)}, {"ssim", ssim(pred, gt)}, {"l1", l1(pred, gt)}};
        if (it.mask) {
            const Mask m = load_mask(*it.mask);
            if (m.width() != gt.width() || m.height() != gt.height()) throw IoError("mask size mismatch for " + it.id);
            row["masked_psnr"] = masked_psnr(pred, gt, m);
            row["mask_pixels"] = m.count();
        }
        rows[i] = std::move(row);
    });

    json summary{{"images", rows.size()}};
    for (const char* key : {"psnr", "ssim", "l1", "masked_psnr"}) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows) {
            if (r.contains(key)) {
                sum += r[key].get<double>();
                ++n;
            }
        }
        if (n > 0) summary[std::string("mean_") + key] = sum / static_cast<double>(n);
    }

    std::string lines;
    for (const auto& r : rows) lines += r.dump() + "\n";
    if (rc.common.json) {
        std::cout << lines;
        emit(summary);
    } else {
        const bool masked = !rows.empty() && rows.front().contains("masked_psnr");
        std::cout << "id                    psnr     ssim        l1" << (masked ? "  masked_psnr" : "") << '\n';
        for (const auto& r : rows) {
            std::string id = r["id"].get<std::string>();
            id.resize(std::max<std::size_t>(id.size() + 1, 18), ' ');
            std::cout << id << fixed(r["psnr"], 3, 9) << fixed(r["ssim"], 4, 9) << fixed(r["l1"], 6, 10);
            if (masked) std::cout << fixed(r["masked_psnr"], 3, 13);
            std::cout << '\n';
        }
        std::cout << "mean (" << rows.size() << " images)";
        for (const char* key : {"psnr", "ssim", "l1", "masked_psnr"}) {
            const std::string k = std::string("mean_") + key;
            if (summary.contains(k)) std::cout << "  " << key << " " << fixed(summary[k], 4);
        }
        std::cout << '\n';
    }
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_text(fs::path(o.out) / "metrics.jsonl", lines);
        write_text(fs::path(o.out) / "summary.json", summary.dump(2) + "\n");
        write_effective_config(o.out, rc);
    }
    return kExitOk;
}

} // namespace flarekit::cli
