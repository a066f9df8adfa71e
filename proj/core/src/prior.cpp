#include "flarekit/prior.hpp"

#include "flarekit/error.hpp"
#include "flarekit/image_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flarekit {

using nlohmann::json;

Image compute_prior(const Image& corrupted, const OpticalCenter& center, double gamma_p) {
    if (corrupted.domain().is_linear()) throw DomainError("compute_prior expects an Encoded image");
    const Image sat = gamma_apply(corrupted, gamma_p, corrupted.domain());
    return rotate180_about(sat, center);
}

PlaneStack::PlaneStack(const Image& first, const Image& second)
    : width_(first.width()), height_(first.height()) {
    if (!first.same_shape(second)) throw std::invalid_argument("PlaneStack: halves differ in size");
    data_.resize(first.pixel_count() * kPlanes);
    auto a = first.samples();
    auto b = second.samples();
    for (std::size_t p = 0; p < first.pixel_count(); ++p) {
        for (int c = 0; c < 3; ++c) {
            data_[p * kPlanes + c] = a[p * 3 + c];
            data_[p * kPlanes + 3 + c] = b[p * 3 + c];
        }
    }
}

Image PlaneStack::half(int which, Domain domain) const {
    if (which != 0 && which != 1) throw std::out_of_range("PlaneStack::half: which must be 0 or 1");
    Image out(width_, height_, domain);
    auto s = out.samples();
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    for (std::size_t p = 0; p < n; ++p) {
        for (int c = 0; c < 3; ++c) s[p * 3 + c] = data_[p * kPlanes + 3 * which + c];
    }
    return out;
}

SixChannelSample build_sample(const FlareTriplet& triplet, const OpticalCenter& center, std::string id,
                              double gamma_p) {
    if (triplet.corrupted.domain() != triplet.flare_free.domain() ||
        triplet.corrupted.domain() != triplet.flare.domain()) {
        throw DomainError("build_sample: triplet images disagree on domain");
    }
    SixChannelSample s;
    s.id = std::move(id);
    s.domain = triplet.corrupted.domain();
    s.input = PlaneStack(triplet.corrupted, compute_prior(triplet.corrupted, center, gamma_p));
    s.target = PlaneStack(triplet.flare_free, triplet.flare);
    return s;
}

namespace {

constexpr const char* kFiles[4] = {"input_rgb", "input_prior", "target_bg", "target_flare"};

} // namespace

void export_samples(const std::filesystem::path& dir, const std::vector<SixChannelSample>& samples) {
    std::filesystem::create_directories(dir);
    json index;
    index["input_planes"] = {"corrupted_r", "corrupted_g", "corrupted_b", "prior_r", "prior_g", "prior_b"};
    index["target_planes"] = {"flare_free_r", "flare_free_g", "flare_free_b", "flare_r", "flare_g", "flare_b"};
    index["samples"] = json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const std::string id = s.id.empty() ? std::to_string(i) : s.id;
        json rec;
        rec["id"] = id;
        rec["domain"] = s.domain.is_linear() ? "linear" : "encoded";
        rec["gamma"] = s.domain.gamma;
        const Image halves[4] = {s.input.half(0, s.domain), s.input.half(1, s.domain),
                                 s.target.half(0, s.domain), s.target.half(1, s.domain)};
        for (int k = 0; k < 4; ++k) {
            const std::string name = id + "_" + kFiles[k] + ".pfm";
            save_image(dir / name, halves[k], ImageFormat::Pfm);
            rec["files"][kFiles[k]] = name;
        }
        index["samples"].push_back(rec);
    }
    std::ofstream out(dir / "samples.json");
    if (!out) throw IoError("cannot write " + (dir / "samples.json").string());
    out << index.dump(2) << '\n';
}

std::vector<SixChannelSample> import_samples(const std::filesystem::path& dir) {
    std::ifstream in(dir / "samples.json");
    if (!in) throw IoError("cannot open " + (dir / "samples.json").string());
    std::vector<SixChannelSample> out;
    try {
        const json index = json::parse(in);
        for (const auto& rec : index.at("samples")) {
            SixChannelSample s;
            s.id = rec.at("id").get<std::string>();
            const double gamma = rec.at("gamma").get<double>();
            s.domain = rec.at("domain").get<std::string>() == "linear" ? Domain::linear() : Domain::encoded(gamma);
            Image halves[4];
            for (int k = 0; k < 4; ++k) {
                halves[k] = load_image(dir / rec.at("files").at(kFiles[k]).get<std::string>());
                halves[k].set_domain(s.domain);
            }
            s.input = PlaneStack(halves[0], halves[1]);
            s.target = PlaneStack(halves[2], halves[3]);
            out.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("samples.json: ") + e.what());
    }
    return out;
}

} // namespace flarekit
