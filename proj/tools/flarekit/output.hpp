#pragma once

#include "flarekit/options.hpp"

#include <flarekit/image.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace flarekit::cli {

/// Writes effective_config.json into `dir` (created if needed).
void write_effective_config(const std::filesystem::path& dir, const RunConfig& rc);
/// Directory that receives provenance for a single output file.
std::filesystem::path provenance_dir(const std::filesystem::path& output_file);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Progress message on stderr when verbosity >= level.
void log(const RunConfig& rc, int level, const std::string& message);

/// One compact JSON object per line on stdout.
void emit(const json& line);

/// Raster centre when `xy` is empty, otherwise (xy[0], xy[1]); validated
/// against the image size.
OpticalCenter center_or_default(const std::vector<double>& xy, int width, int height);

/// Human table column.
std::string fixed(double v, int precision, int width = 0);
std::string sci(double v, int precision = 3);

int run_scan(const RunConfig& rc);
int run_synth(const RunConfig& rc);
int run_prior(const RunConfig& rc);
int run_remove(const RunConfig& rc);
int run_hdr(const RunConfig& rc);
int run_simulate(const RunConfig& rc);
int run_eval(const RunConfig& rc);

} // namespace flarekit::cli
