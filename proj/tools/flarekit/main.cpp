#include "flarekit/options.hpp"
#include "flarekit/output.hpp"

#include <flarekit/error.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace flarekit::cli;

namespace {

void add_common(CLI::App& app, Common& c) {
    app.add_option("--seed", c.seed, "Base seed; item i uses a seed derived from (seed, i)");
    app.add_option("--threads", c.threads, "Worker threads (outputs do not depend on this)")->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", c.verbose, "Progress on stderr; repeat for more");
    app.add_flag("--json", c.json, "Line-oriented JSON on stdout instead of tables");
    app.add_option("--config", c.config, "JSON file of option values; flags given here win");
}

void build_app(CLI::App& app, RunConfig& rc) {
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", "flarekit 0.1.0");
    add_common(app, rc.common);

    auto* scan = app.add_subcommand("scan", "List the bracket pairs found under a directory of exposure groups");
    scan->add_option("--in", rc.scan.in, "Root directory holding <group>/<shot> files");
    scan->add_option("--group-size", rc.scan.group_size, "Shots per bracket group");
    scan->add_option("--out", rc.scan.out, "Directory for scan.jsonl and effective_config.json");

    auto* synth = app.add_subcommand("synth", "Generate flare triplets from bracket pairs");
    synth->add_option("--in", rc.synth.in, "Root directory of bracket groups");
    synth->add_option("--out", rc.synth.out, "Output directory");
    synth->add_option("--count", rc.synth.count, "Number of triplets (pairs are used round robin)");
    synth->add_option("--group-size", rc.synth.group_size, "Shots per bracket group");
    synth->add_option("--png-gamma", rc.synth.png_gamma, "Gamma tag for PNG inputs");
    synth->add_option("--test-every", rc.synth.test_every, "Every n-th triplet is marked 'test' (0 = none)");
    synth->add_flag("--samples", rc.synth.samples, "Also write six-plane PFM stacks next to each triplet");

    auto* prior = app.add_subcommand("prior", "Compute the rotated saturation prior of an image");
    prior->add_option("--in", rc.prior.in, "Input image");
    prior->add_option("--center", rc.prior.center, "Optical centre cx,cy (default: raster centre)")
        ->delimiter(',')->expected(2);
    prior->add_option("--gamma-p", rc.prior.gamma_p, "Saturation exponent");
    prior->add_option("--png-gamma", rc.prior.png_gamma, "Gamma tag for PNG inputs");
    prior->add_option("--out", rc.prior.out, "Output image (.png or .pfm)");

    auto* remove = app.add_subcommand("remove", "Fit and subtract reflective flare");
    remove->add_option("--in", rc.remove.in, "Input image(s)");
    remove->add_option("--center", rc.remove.center, "Optical centre cx,cy (default: raster centre)")
        ->delimiter(',')->expected(2);
    remove->add_option("--png-gamma", rc.remove.png_gamma, "Gamma tag for PNG inputs");
    remove->add_option("--out-dir", rc.remove.out_dir, "Output directory");

    auto* simulate = app.add_subcommand("simulate", "Trace direct and ghost rays through a lens prescription");
    auto& so = rc.simulate;
    simulate->add_option("--lens", so.lens, "Prescription file (default: bundled symmetric lens)");
    simulate->add_option("--path", so.path, "Ghost path first,second (default: from the file)")
        ->delimiter(',')->expected(2);
    simulate->add_option("--h-min", so.h_min, "Smallest object height (mm)");
    simulate->add_option("--h-max", so.h_max, "Largest object height (mm)");
    simulate->add_option("--h-steps", so.h_steps, "Heights in the sweep");
    simulate->add_option("--theta-min", so.theta_min, "Smallest ray angle (rad)");
    simulate->add_option("--theta-max", so.theta_max, "Largest ray angle (rad)");
    simulate->add_option("--theta-steps", so.theta_steps, "Angles in the sweep");
    simulate->add_option("--design", so.design, "Re-solve curvatures of surfaces a,b for --target-k")
        ->delimiter(',')->expected(2);
    simulate->add_option("--target-k", so.target_k, "Ghost ratio sought by --design");
    simulate->add_option("--write-lens", so.write_lens, "Save the (possibly redesigned) prescription");
    simulate->add_option("--out", so.out, "Directory for table.tsv and report.json");

    auto* eval = app.add_subcommand("eval", "PSNR, SSIM and masked PSNR of predictions against ground truth");
    eval->add_option("--pred", rc.eval.pred, "Prediction directory");
    eval->add_option("--gt", rc.eval.gt, "Ground-truth directory");
    eval->add_option("--mask", rc.eval.mask, "Mask directory");
    eval->add_option("--pred-file", rc.eval.pred_file, "Prediction file name inside <pred>/<id>/");
    eval->add_option("--gt-file", rc.eval.gt_file, "Ground-truth file name inside <gt>/<id>/");
    eval->add_option("--mask-file", rc.eval.mask_file, "Mask file name inside <mask or gt>/<id>/");
    eval->add_option("--png-gamma", rc.eval.png_gamma, "Gamma tag for PNG inputs");
    eval->add_option("--out", rc.eval.out, "Directory for metrics.jsonl and summary.json");

    auto* hdr = app.add_subcommand("hdr", "Restore clipped light sources from the flare (12 EV merge)");
    hdr->add_option("--in", rc.hdr.in, "Input image");
    hdr->add_option("--flare", rc.hdr.flare, "Flare estimate (default: run remove first)");
    hdr->add_option("--center", rc.hdr.center, "Optical centre cx,cy (default: raster centre)")
        ->delimiter(',')->expected(2);
    hdr->add_option("--ev-step", rc.hdr.ev_step, "Exposure gap between flare and input");
    hdr->add_option("--sat-threshold", rc.hdr.sat_threshold, "Pixels at or above this are replaced");
    hdr->add_option("--png-gamma", rc.hdr.png_gamma, "Gamma tag for PNG inputs");
    hdr->add_option("--out", rc.hdr.out, "Output .pfm (linear)");

    for (auto* sub : app.get_subcommands({})) {
        sub->callback([&rc, sub] { rc.command = sub->get_name(); });
    }
}

int fail(const char* kind, int code, const std::string& message) {
    std::cerr << json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << '\n';
    return code;
}

int dispatch(const RunConfig& rc) {
    if (rc.command == "scan") return run_scan(rc);
    if (rc.command == "synth") return run_synth(rc);
    if (rc.command == "prior") return run_prior(rc);
    if (rc.command == "remove") return run_remove(rc);
    if (rc.command == "simulate") return run_simulate(rc);
    if (rc.command == "eval") return run_eval(rc);
    if (rc.command == "hdr") return run_hdr(rc);
    throw UsageError("no subcommand given");
}

} // namespace

int main(int argc, char** argv) {
    const char* about = "Reflective flare tools: synthesis, priors, removal, optics, metrics";
    // First pass finds the subcommand and config file; the second binds the
    // config values as defaults so explicit flags override them.
    RunConfig probe_rc;
    CLI::App probe{about, "flarekit"};
    build_app(probe, probe_rc);
    try {
        probe.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return probe.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", kExitUsage, e.what());
    }

    try {
        RunConfig rc;
        rc.command = probe_rc.command;
        if (!probe_rc.common.config.empty()) apply_config_file(rc, probe_rc.common.config);
        CLI::App app{about, "flarekit"};
        build_app(app, rc);
        app.parse(argc, argv);
        return dispatch(rc);
    } catch (const CLI::ParseError& e) {
        return fail("usage", kExitUsage, e.what());
    } catch (const UsageError& e) {
        return fail("usage", kExitUsage, e.what());
    } catch (const std::invalid_argument& e) {
        return fail("usage", kExitUsage, e.what());
    } catch (const flarekit::IoError& e) {
        return fail("io", kExitFailure, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail("io", kExitFailure, e.what());
    } catch (const std::exception& e) {
        return fail("failure", kExitFailure, e.what());
    }
}
