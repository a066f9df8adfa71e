#include "flarekit/output.hpp"

#include <flarekit/error.hpp>
#include <flarekit/optics.hpp>

#include <iostream>
#include <sstream>

#ifndef FLAREKIT_SOURCE_DATA_DIR
#define FLAREKIT_SOURCE_DATA_DIR ""
#endif
#ifndef FLAREKIT_INSTALL_DATA_DIR
#define FLAREKIT_INSTALL_DATA_DIR ""
#endif

namespace flarekit::cli {

namespace fs = std::filesystem;
using namespace flarekit::optics;

namespace {

constexpr const char* kBundledLens = "lenses/symmetric5.lens";

fs::path bundled_lens() {
    for (const char* root : {FLAREKIT_INSTALL_DATA_DIR, FLAREKIT_SOURCE_DATA_DIR}) {
        if (*root == '\0') continue;
        const fs::path p = fs::path(root) / kBundledLens;
        if (fs::exists(p)) return p;
    }
    throw IoError(std::string("bundled lens ") + kBundledLens + " not found; pass --lens");
}

} // namespace

int run_simulate(const RunConfig& rc) {
    const auto& o = rc.simulate;
    const fs::path lens_path = o.lens.empty() ? bundled_lens() : fs::path(o.lens);
    LensPrescription lens = load_prescription(lens_path);

    GhostPath path;
    if (!o.path.empty()) {
        if (o.path.size() != 2) throw UsageError("--path takes two surface indices: first,second");
        path = {o.path[0], o.path[1]};
    } else if (lens.ghost) {
        path = *lens.ghost;
    } else {
        throw UsageError("simulate: the lens file names no ghost path; pass --path first,second");
    }
    try {
        validate(lens, path);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    if (!o.design.empty()) {
        if (o.design.size() != 2) throw UsageError("--design takes two surface indices");
        DesignOptions opts;
        opts.target_k = o.target_k;
        lens = design_ghost_ratio(lens, path, o.design[0], o.design[1], opts);
        log(rc, 1, "redesigned surfaces " + std::to_string(o.design[0]) + " and " + std::to_string(o.design[1]));
    }
    if (!o.write_lens.empty()) {
        lens.ghost = path;
        save_prescription(o.write_lens, lens);
    }

    SweepGrid grid;
    grid.h_min = o.h_min;
    grid.h_max = o.h_max;
    grid.h_steps = o.h_steps;
    grid.theta_min = o.theta_min;
    grid.theta_max = o.theta_max;
    grid.theta_steps = o.theta_steps;
    const auto rows = sweep(lens, path, grid);

    std::ostringstream table;
    table << "h\ttheta\th0\th1\tk\n";
    table.precision(17);
    for (const auto& s : rows) {
        table << s.h << '\t' << s.theta << '\t' << s.h0 << '\t' << s.h1 << '\t' << s.h1 / s.h0 << '\n';
    }
    if (rc.common.json) {
        for (const auto& s : rows) emit({{"h", s.h}, {"theta", s.theta}, {"h0", s.h0}, {"h1", s.h1}, {"k", s.h1 / s.h0}});
    } else {
        std::cout << "       h     theta                 h0                 h1            k\n";
        for (const auto& s : rows) {
            std::cout << fixed(s.h, 4, 8) << fixed(s.theta, 4, 10) << fixed(s.h0, 12, 19) << fixed(s.h1, 12, 19)
                      << fixed(s.h1 / s.h0, 9, 13) << '\n';
        }
    }

    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_text(fs::path(o.out) / "table.tsv", table.str());
    }

    // Unfocused systems have no ratio: report the defocus and fail.
    GhostRatio r;
    try {
        r = ghost_ratio(lens, path, grid);
    } catch (const UnfocusedError& e) {
        if (!o.out.empty()) {
            write_text(fs::path(o.out) / "report.json",
                       json{{"focused", false},
                            {"direct_defocus", e.direct_defocus()},
                            {"ghost_defocus", e.ghost_defocus()}}.dump(2) + "\n");
            write_effective_config(o.out, rc);
        }
        throw;
    }
    const json report{{"focused", true},
                      {"k", r.k},
                      {"fit_residual", r.fit_residual},
                      {"relative_std", r.relative_std},
                      {"linear_residual", r.linear_residual},
                      {"direct_defocus", r.direct_defocus},
                      {"ghost_defocus", r.ghost_defocus},
                      {"path", {path.first, path.second}}};
    if (rc.common.json) {
        emit(report);
    } else {
        std::cout << "\nk = " << fixed(r.k, 6) << "\n"
                  << "max |h1 - k h0|          " << sci(r.fit_residual) << " mm\n"
                  << "relative std of h1/h0    " << sci(r.relative_std) << "\n"
                  << "linear fit residual      " << sci(r.linear_residual) << " mm\n"
                  << "direct defocus dh/dtheta " << sci(r.direct_defocus) << " mm/rad\n"
                  << "ghost defocus dh/dtheta  " << sci(r.ghost_defocus) << " mm/rad\n";
    }
    if (!o.out.empty()) {
        write_text(fs::path(o.out) / "report.json", report.dump(2) + "\n");
        write_effective_config(o.out, rc);
    }
    return kExitOk;
}

} // namespace flarekit::cli
