#include "flarekit/error.hpp"
#include "flarekit/optics.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace flarekit::optics {

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
    throw std::invalid_argument("prescription line " + std::to_string(line) + ": " + what);
}

} // namespace

LensPrescription parse_prescription(std::string_view text) {
    LensPrescription lens;
    bool have_object = false;
    bool have_sensor = false;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream line(raw);
        std::string key;
        if (!(line >> key)) continue;

        if (key == "object") {
            if (!(line >> lens.object_distance)) parse_fail(line_no, "expected object distance");
            have_object = true;
        } else if (key == "surface") {
            Surface s;
            if (!(line >> s.curvature >> s.thickness >> s.index)) {
                parse_fail(line_no, "expected <curvature> <thickness> <index>");
            }
            lens.surfaces.push_back(s);
        } else if (key == "sensor") {
            if (!(line >> lens.sensor_distance)) parse_fail(line_no, "expected sensor distance");
            have_sensor = true;
        } else if (key == "ghost") {
            GhostPath p;
            if (!(line >> p.first >> p.second)) parse_fail(line_no, "expected <first> <second>");
            lens.ghost = p;
        } else {
            parse_fail(line_no, "unknown record '" + key + "'");
        }
        std::string extra;
        if (line >> extra) parse_fail(line_no, "trailing token '" + extra + "'");
    }
    if (!have_object) throw std::invalid_argument("prescription: missing 'object' record");
    if (!have_sensor) throw std::invalid_argument("prescription: missing 'sensor' record");
    if (!lens.surfaces.empty() && lens.surfaces.back().thickness != 0.0) {
        throw std::invalid_argument("prescription: last surface thickness must be 0 (use 'sensor')");
    }
    validate(lens);
    return lens;
}

LensPrescription load_prescription(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prescription " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_prescription(buf.str());
}

std::string format_prescription(const LensPrescription& lens) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "object " << lens.object_distance << '\n';
    for (const auto& s : lens.surfaces) {
        os << "surface " << s.curvature << ' ' << s.thickness << ' ' << s.index << '\n';
    }
    os << "sensor " << lens.sensor_distance << '\n';
    if (lens.ghost) os << "ghost " << lens.ghost->first << ' ' << lens.ghost->second << '\n';
    return os.str();
}

void save_prescription(const std::filesystem::path& path, const LensPrescription& lens) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write prescription " + path.string());
    out << format_prescription(lens);
    if (!out) throw IoError("short write to " + path.string());
}

} // namespace flarekit::optics
