#pragma once

#include <flarekit/removal.hpp>
#include <flarekit/synthesis.hpp>

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flarekit::cli {

using json = nlohmann::json;

/// Bad flags or config contents; exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Settings that do not change any output file (threads, verbosity, output
// style) stay out of the echoed config.
struct Common {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    int verbose = 0;
    bool json = false;
    std::string config;
};

struct ScanOptions {
    std::string in;
    std::size_t group_size = 5;
    std::string out;
};

struct SynthOptions {
    std::string in;
    std::string out;
    std::size_t count = 0;
    std::size_t group_size = 5;
    double png_gamma = 2.2;
    std::size_t test_every = 0;  // every n-th item goes to the test split; 0 = none
    bool samples = false;        // also export six-plane PFM stacks
    SynthesisConfig synthesis;
};

struct PriorOptions {
    std::string in;
    std::vector<double> center;  // empty = raster centre
    double gamma_p = 10.0;
    double png_gamma = 2.2;
    std::string out;
};

struct RemoveOptions {
    std::vector<std::string> in;
    std::vector<double> center;
    double png_gamma = 2.2;
    std::string out_dir;
    RemovalConfig removal;
};

struct SimulateOptions {
    std::string lens;                 // empty = bundled symmetric lens
    std::vector<std::size_t> path;    // empty = the lens file's ghost line
    double h_min = 0.1;
    double h_max = 1.0;
    int h_steps = 21;
    double theta_min = -0.05;
    double theta_max = 0.05;
    int theta_steps = 21;
    std::vector<std::size_t> design;  // two free surfaces; empty = no redesign
    double target_k = -1.0;
    std::string write_lens;
    std::string out;
};

struct EvalOptions {
    std::string pred;
    std::string gt;
    std::string mask;
    std::string pred_file;  // set to compare <dir>/<id>/<file> trees
    std::string gt_file;
    std::string mask_file;
    double png_gamma = 2.2;
    std::string out;
};

struct HdrOptions {
    std::string in;
    std::string flare;  // empty = estimate with remove_flare
    std::vector<double> center;
    double ev_step = 12.0;
    double sat_threshold = 0.99;
    double png_gamma = 2.2;
    std::string out;
    RemovalConfig removal;
};

struct RunConfig {
    std::string command;
    Common common;
    ScanOptions scan;
    SynthOptions synth;
    PriorOptions prior;
    RemoveOptions remove;
    SimulateOptions simulate;
    EvalOptions eval;
    HdrOptions hdr;
};

/// Merges a config file object into `rc` for rc.command. Keys are the long
/// flag names with '-' replaced by '_'; "command" may repeat the subcommand.
/// Throws UsageError on unknown keys or wrong value types.
void apply_config(RunConfig& rc, const json& j);
void apply_config_file(RunConfig& rc, const std::string& path);

/// Every setting of the active subcommand that can influence its outputs.
json effective_config(const RunConfig& rc);

} // namespace flarekit::cli
