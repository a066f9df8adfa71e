#include "flarekit/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace flarekit::optics {

TransferMatrix TransferMatrix::inverse() const {
    const double det = determinant();
    if (det == 0.0 || !std::isfinite(det)) {
        throw std::domain_error("transfer matrix is singular");
    }
    return {d() / det, -b() / det, -c() / det, a() / det};
}

TransferMatrix translation_matrix(double distance) {
    return {1.0, distance, 0.0, 1.0};
}

TransferMatrix refraction_matrix(double curvature, double n_in, double n_out) {
    if (!(n_in > 0.0) || !(n_out > 0.0)) {
        throw std::invalid_argument("refractive indices must be positive");
    }
    return {1.0, 0.0, (n_out - n_in) * curvature / n_out, n_in / n_out};
}

TransferMatrix reflection_matrix(double curvature) {
    return {1.0, 0.0, 2.0 * curvature, 1.0};
}

TransferMatrix reverse_refraction_matrix(double curvature, double n_in, double n_out) {
    constexpr TransferMatrix flip{1.0, 0.0, 0.0, -1.0};
    return flip * refraction_matrix(curvature, n_in, n_out).inverse() * flip;
}

TransferMatrix compose(std::span<const TransferMatrix> matrices) {
    TransferMatrix out = TransferMatrix::identity();
    for (const auto& m : matrices) out = out * m;
    return out;
}

void validate(const LensPrescription& lens) {
    if (lens.surfaces.empty()) throw std::invalid_argument("prescription has no surfaces");
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!finite_nonneg(lens.object_distance)) throw std::invalid_argument("object distance must be >= 0");
    if (!std::isfinite(lens.sensor_distance)) throw std::invalid_argument("sensor distance must be finite");
    for (std::size_t i = 0; i < lens.surfaces.size(); ++i) {
        const auto& s = lens.surfaces[i];
        if (!std::isfinite(s.curvature)) throw std::invalid_argument("surface curvature must be finite");
        if (!finite_nonneg(s.thickness)) throw std::invalid_argument("surface thickness must be >= 0");
        if (!(s.index > 0.0) || !std::isfinite(s.index)) {
            throw std::invalid_argument("refractive index must be positive");
        }
    }
    if (lens.ghost) validate(lens, *lens.ghost);
}

void validate(const LensPrescription& lens, const GhostPath& path) {
    if (path.first >= lens.surfaces.size() || path.second >= path.first) {
        throw std::invalid_argument("ghost path needs second < first < surface count");
    }
}

namespace {

// Matrices in application order (first element acts first).
using Chain = std::vector<TransferMatrix>;

void forward_through(const LensPrescription& lens, std::size_t i, Chain& chain) {
    const auto& s = lens.surfaces[i];
    chain.push_back(refraction_matrix(s.curvature, lens.index_before(i), s.index));
    if (i + 1 < lens.surfaces.size()) chain.push_back(translation_matrix(s.thickness));
}

TransferMatrix product(const Chain& applied) {
    TransferMatrix out = TransferMatrix::identity();
    for (const auto& m : applied) out = m * out;
    return out;
}

Chain written_order(Chain applied) {
    std::reverse(applied.begin(), applied.end());
    return applied;
}

Chain applied_direct(const LensPrescription& lens) {
    Chain chain{translation_matrix(lens.object_distance)};
    for (std::size_t i = 0; i < lens.surfaces.size(); ++i) forward_through(lens, i, chain);
    chain.push_back(translation_matrix(lens.sensor_distance));
    return chain;
}

Chain applied_ghost(const LensPrescription& lens, const GhostPath& path) {
    Chain chain{translation_matrix(lens.object_distance)};
    for (std::size_t i = 0; i < path.first; ++i) forward_through(lens, i, chain);

    // Arriving from the object side, a centre of curvature on the incoming
    // side makes the surface concave: effective mirror curvature is -c.
    chain.push_back(reflection_matrix(-lens.surfaces[path.first].curvature));
    for (std::size_t i = path.first - 1; i > path.second; --i) {
        const auto& s = lens.surfaces[i];
        chain.push_back(translation_matrix(s.thickness));
        chain.push_back(reverse_refraction_matrix(s.curvature, lens.index_before(i), s.index));
    }
    const auto& back = lens.surfaces[path.second];
    chain.push_back(translation_matrix(back.thickness));
    // Arriving from the sensor side the same surface is convex: +c.
    chain.push_back(reflection_matrix(back.curvature));
    chain.push_back(translation_matrix(back.thickness));

    for (std::size_t i = path.second + 1; i < lens.surfaces.size(); ++i) forward_through(lens, i, chain);
    chain.push_back(translation_matrix(lens.sensor_distance));
    return chain;
}

double central_difference(const TransferMatrix& m) {
    const RayState plus = m * RayState{1.0, kFocusProbeStep};
    const RayState minus = m * RayState{1.0, -kFocusProbeStep};
    return (plus.height - minus.height) / (2.0 * kFocusProbeStep);
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw std::invalid_argument("sweep needs at least one step");
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

} // namespace

std::vector<TransferMatrix> direct_chain(const LensPrescription& lens) {
    validate(lens);
    return written_order(applied_direct(lens));
}

std::vector<TransferMatrix> ghost_chain(const LensPrescription& lens, const GhostPath& path) {
    validate(lens);
    validate(lens, path);
    return written_order(applied_ghost(lens, path));
}

TransferMatrix direct_matrix(const LensPrescription& lens) {
    validate(lens);
    return product(applied_direct(lens));
}

TransferMatrix ghost_matrix(const LensPrescription& lens, const GhostPath& path) {
    validate(lens);
    validate(lens, path);
    return product(applied_ghost(lens, path));
}

RayState trace_direct(const LensPrescription& lens, const RayState& ray) {
    return direct_matrix(lens) * ray;
}

RayState trace_ghost(const LensPrescription& lens, const RayState& ray, const GhostPath& path) {
    return ghost_matrix(lens, path) * ray;
}

double direct_defocus(const LensPrescription& lens) {
    return central_difference(direct_matrix(lens));
}

double ghost_defocus(const LensPrescription& lens, const GhostPath& path) {
    return central_difference(ghost_matrix(lens, path));
}

LensPrescription autofocus(LensPrescription lens) {
    validate(lens);
    auto defocus_at = [&lens](double s) {
        lens.sensor_distance = s;
        return direct_defocus(lens);
    };
    double s0 = lens.sensor_distance;
    double s1 = s0 + 1.0;
    double f0 = defocus_at(s0);
    double f1 = defocus_at(s1);
    for (int it = 0; it < 50 && std::abs(f1) > 1e-13; ++it) {
        if (f1 == f0) throw std::runtime_error("autofocus: system has no focusing power");
        const double s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
        s0 = s1;
        f0 = f1;
        s1 = s2;
        f1 = defocus_at(s1);
    }
    if (!std::isfinite(s1)) throw std::runtime_error("autofocus diverged");
    lens.sensor_distance = s1;
    return lens;
}

UnfocusedError::UnfocusedError(double direct_defocus, double ghost_defocus)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "images are not focused on the sensor (direct dh/dtheta = " << direct_defocus
             << ", ghost dh/dtheta = " << ghost_defocus << " mm/rad)";
          return os.str();
      }()),
      direct_(direct_defocus),
      ghost_(ghost_defocus) {}

std::vector<double> SweepGrid::heights() const { return linspace(h_min, h_max, h_steps); }
std::vector<double> SweepGrid::angles() const { return linspace(theta_min, theta_max, theta_steps); }

std::vector<SweepSample> sweep(const LensPrescription& lens, const GhostPath& path, const SweepGrid& grid) {
    const auto direct = direct_matrix(lens);
    const auto ghost = ghost_matrix(lens, path);
    std::vector<SweepSample> out;
    for (double h : grid.heights()) {
        for (double theta : grid.angles()) {
            const RayState ray{h, theta};
            out.push_back({h, theta, (direct * ray).height, (ghost * ray).height});
        }
    }
    return out;
}

GhostRatio ghost_ratio(const LensPrescription& lens, const GhostPath& path, const SweepGrid& grid) {
    GhostRatio r;
    r.direct_defocus = direct_defocus(lens);
    r.ghost_defocus = ghost_defocus(lens, path);
    if (std::abs(r.direct_defocus) >= kFocusTolerance || std::abs(r.ghost_defocus) >= kFocusTolerance) {
        throw UnfocusedError(r.direct_defocus, r.ghost_defocus);
    }

    const auto samples = sweep(lens, path, grid);
    double s00 = 0.0, s01 = 0.0;
    for (const auto& s : samples) {
        s00 += s.h0 * s.h0;
        s01 += s.h0 * s.h1;
    }
    if (s00 == 0.0) throw std::runtime_error("ghost_ratio: direct image heights are all zero");
    r.k = s01 / s00;

    double mean = 0.0;
    for (const auto& s : samples) {
        r.fit_residual = std::max(r.fit_residual, std::abs(s.h1 - r.k * s.h0));
        mean += s.h1 / s.h0;
    }
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto& s : samples) var += (s.h1 / s.h0 - mean) * (s.h1 / s.h0 - mean);
    var /= static_cast<double>(samples.size());
    r.relative_std = std::sqrt(var) / std::abs(mean);

    // h1 = a h + b by ordinary least squares.
    double sh = 0.0, sy = 0.0, shh = 0.0, shy = 0.0;
    const double n = static_cast<double>(samples.size());
    for (const auto& s : samples) {
        sh += s.h;
        sy += s.h1;
        shh += s.h * s.h;
        shy += s.h * s.h1;
    }
    const double denom = n * shh - sh * sh;
    const double a = denom != 0.0 ? (n * shy - sh * sy) / denom : 0.0;
    const double b = (sy - a * sh) / n;
    for (const auto& s : samples) {
        r.linear_residual = std::max(r.linear_residual, std::abs(s.h1 - (a * s.h + b)));
    }
    return r;
}

std::array<double, 2> predict_flare_position(std::array<double, 2> light, std::array<double, 2> center,
                                             double k) {
    return {center[0] + k * (light[0] - center[0]), center[1] + k * (light[1] - center[1])};
}

LensPrescription design_ghost_ratio(LensPrescription lens, const GhostPath& path, std::size_t free_a,
                                    std::size_t free_b, const DesignOptions& options) {
    validate(lens);
    validate(lens, path);
    if (free_a >= lens.surfaces.size() || free_b >= lens.surfaces.size() || free_a == free_b) {
        throw std::invalid_argument("design: free surfaces must be two distinct valid indices");
    }

    auto residual = [&](double ca, double cb) -> std::array<double, 2> {
        LensPrescription trial = lens;
        trial.surfaces[free_a].curvature = ca;
        trial.surfaces[free_b].curvature = cb;
        trial = autofocus(trial);
        const auto direct = direct_matrix(trial);
        const auto ghost = ghost_matrix(trial, path);
        return {ghost.b(), ghost.a() / direct.a() - options.target_k};
    };
    auto norm = [](const std::array<double, 2>& r) { return std::hypot(r[0], r[1]); };

    double ca = lens.surfaces[free_a].curvature;
    double cb = lens.surfaces[free_b].curvature;
    auto r = residual(ca, cb);
    for (int it = 0; it < options.max_iterations && norm(r) > options.tolerance; ++it) {
        const double ha = 1e-7 * std::max(1.0, std::abs(ca));
        const double hb = 1e-7 * std::max(1.0, std::abs(cb));
        const auto ra = residual(ca + ha, cb);
        const auto rb = residual(ca, cb + hb);
        const double j00 = (ra[0] - r[0]) / ha, j10 = (ra[1] - r[1]) / ha;
        const double j01 = (rb[0] - r[0]) / hb, j11 = (rb[1] - r[1]) / hb;
        const double det = j00 * j11 - j01 * j10;
        if (det == 0.0 || !std::isfinite(det)) break;
        const double da = -(j11 * r[0] - j01 * r[1]) / det;
        const double db = -(-j10 * r[0] + j00 * r[1]) / det;

        double step = 1.0;
        bool moved = false;
        for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
            try {
                const auto rn = residual(ca + step * da, cb + step * db);
                if (norm(rn) < norm(r)) {
                    ca += step * da;
                    cb += step * db;
                    r = rn;
                    moved = true;
                    break;
                }
            } catch (const std::exception&) {
                // trial left the valid region; shrink the step
            }
        }
        if (!moved) break;
    }
    if (!(norm(r) <= std::max(options.tolerance, 1e-12))) {
        throw std::runtime_error("design_ghost_ratio did not converge");
    }
    lens.surfaces[free_a].curvature = ca;
    lens.surfaces[free_b].curvature = cb;
    lens = autofocus(lens);
    lens.ghost = path;
    return lens;
}

} // namespace flarekit::optics
