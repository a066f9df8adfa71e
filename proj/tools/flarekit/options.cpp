#include "flarekit/options.hpp"

#include <fstream>
#include <sstream>

namespace flarekit {

// Nested sections reuse the library's own (strict) config readers.
void to_json(nlohmann::json& j, const SynthesisConfig& c) { j = nlohmann::json::parse(config_to_json(c)); }
void from_json(const nlohmann::json& j, SynthesisConfig& c) { c = config_from_json(j.dump()); }
void to_json(nlohmann::json& j, const RemovalConfig& c) { j = nlohmann::json::parse(removal_config_to_json(c)); }
void from_json(const nlohmann::json& j, RemovalConfig& c) { c = removal_config_from_json(j.dump()); }

namespace cli {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScanOptions, in, group_size, out)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthOptions, in, out, count, group_size, png_gamma, test_every,
                                                samples, synthesis)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PriorOptions, in, center, gamma_p, png_gamma, out)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RemoveOptions, in, center, png_gamma, out_dir, removal)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimulateOptions, lens, path, h_min, h_max, h_steps, theta_min,
                                                theta_max, theta_steps, design, target_k, write_lens, out)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalOptions, pred, gt, mask, pred_file, gt_file, mask_file,
                                                png_gamma, out)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HdrOptions, in, flare, center, ev_step, sat_threshold, png_gamma,
                                                out, removal)

namespace {

template <class Fn>
decltype(auto) with_section(RunConfig& rc, Fn&& fn) {
    if (rc.command == "scan") return fn(rc.scan);
    if (rc.command == "synth") return fn(rc.synth);
    if (rc.command == "prior") return fn(rc.prior);
    if (rc.command == "remove") return fn(rc.remove);
    if (rc.command == "simulate") return fn(rc.simulate);
    if (rc.command == "eval") return fn(rc.eval);
    if (rc.command == "hdr") return fn(rc.hdr);
    throw UsageError("unknown command '" + rc.command + "'");
}

} // namespace

void apply_config(RunConfig& rc, const json& j) {
    if (!j.is_object()) throw UsageError("config: expected a JSON object");
    try {
        with_section(rc, [&](auto& section) {
            json merged = section;
            for (auto it = j.begin(); it != j.end(); ++it) {
                const std::string& key = it.key();
                const json& v = it.value();
                if (key == "command") {
                    if (v != rc.command) {
                        throw UsageError("config: written for '" + v.dump() + "', not '" + rc.command + "'");
                    }
                } else if (key == "seed") {
                    rc.common.seed = v.get<std::uint64_t>();
                } else if (key == "threads") {
                    rc.common.threads = v.get<unsigned>();
                } else if (key == "verbose") {
                    rc.common.verbose = v.get<int>();
                } else if (key == "json") {
                    rc.common.json = v.get<bool>();
                } else if (merged.contains(key)) {
                    merged[key] = v;
                } else {
                    throw UsageError("config: unknown key '" + key + "' for " + rc.command);
                }
            }
            section = merged.get<std::decay_t<decltype(section)>>();
        });
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void apply_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw UsageError("config " + path + ": " + e.what());
    }
    apply_config(rc, j);
}

json effective_config(const RunConfig& rc) {
    json j = with_section(const_cast<RunConfig&>(rc), [](const auto& section) { return json(section); });
    j["command"] = rc.command;
    j["seed"] = rc.common.seed;
    return j;
}

} // namespace cli
} // namespace flarekit
