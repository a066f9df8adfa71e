#include "flarekit/output.hpp"

#include <flarekit/error.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace flarekit::cli {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("short write to " + path.string());
}

void write_effective_config(const fs::path& dir, const RunConfig& rc) {
    fs::create_directories(dir);
    write_text(dir / "effective_config.json", effective_config(rc).dump(2) + "\n");
}

fs::path provenance_dir(const fs::path& output_file) {
    const fs::path parent = output_file.parent_path();
    return parent.empty() ? fs::path(".") : parent;
}

void log(const RunConfig& rc, int level, const std::string& message) {
    if (rc.common.verbose >= level) std::cerr << "[flarekit " << rc.command << "] " << message << '\n';
}

void emit(const json& line) { std::cout << line.dump() << '\n'; }

OpticalCenter center_or_default(const std::vector<double>& xy, int width, int height) {
    if (xy.empty()) return OpticalCenter::raster_center(width, height);
    if (xy.size() != 2) throw UsageError("--center takes two values: cx,cy");
    const OpticalCenter c{xy[0], xy[1]};
    try {
        validate_center(c, width, height);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return c;
}

std::string fixed(double v, int precision, int width) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << std::setw(width) << v;
    return s.str();
}

std::string sci(double v, int precision) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(precision) << v;
    return s.str();
}

} // namespace flarekit::cli
