#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flarekit::optics {

/// Paraxial ray: height above the axis (mm) and angle to the axis (rad),
/// the angle measured along the direction of travel.
struct RayState {
    double height = 0.0;
    double angle = 0.0;

    friend bool operator==(const RayState&, const RayState&) = default;
};

/// 2x2 ray transfer matrix [[a, b], [c, d]] acting on (height, angle).
class TransferMatrix {
public:
    constexpr TransferMatrix() = default;
    constexpr TransferMatrix(double a, double b, double c, double d) : m_{a, b, c, d} {}

    static constexpr TransferMatrix identity() { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr double a() const { return m_[0]; }
    constexpr double b() const { return m_[1]; }
    constexpr double c() const { return m_[2]; }
    constexpr double d() const { return m_[3]; }

    double determinant() const { return m_[0] * m_[3] - m_[1] * m_[2]; }
    TransferMatrix inverse() const;

    friend TransferMatrix operator*(const TransferMatrix& l, const TransferMatrix& r) {
        return {l.a() * r.a() + l.b() * r.c(), l.a() * r.b() + l.b() * r.d(),
                l.c() * r.a() + l.d() * r.c(), l.c() * r.b() + l.d() * r.d()};
    }
    friend RayState operator*(const TransferMatrix& m, const RayState& r) {
        return {m.a() * r.height + m.b() * r.angle, m.c() * r.height + m.d() * r.angle};
    }
    friend bool operator==(const TransferMatrix&, const TransferMatrix&) = default;

private:
    std::array<double, 4> m_{1.0, 0.0, 0.0, 1.0};
};

/// Free-space propagation over distance d: [[1, d], [0, 1]].
TransferMatrix translation_matrix(double distance);

/// Refraction at a spherical interface of curvature c between media n_in
/// (before) and n_out (after): [[1, 0], [(n_out - n_in) c / n_out, n_in / n_out]].
/// Positive curvature places the centre of curvature on the incoming side.
TransferMatrix refraction_matrix(double curvature, double n_in, double n_out);

/// Mirror of effective curvature c, in the frame that follows the ray:
/// [[1, 0], [2c, 1]]. Negative c converges (focal length -1/(2c)).
TransferMatrix reflection_matrix(double curvature);

/// The interface crossed in the opposite direction: the inverse of the
/// forward refraction with the angle sign flipped on both sides.
TransferMatrix reverse_refraction_matrix(double curvature, double n_in, double n_out);

/// Product of `matrices` in written order; the last element acts first.
TransferMatrix compose(std::span<const TransferMatrix> matrices);

struct Surface {
    double curvature = 0.0;  ///< 1/R in 1/mm; 0 for a flat interface
    double thickness = 0.0;  ///< distance to the next surface (mm)
    double index = 1.0;      ///< refractive index of the medium after this surface

    friend bool operator==(const Surface&, const Surface&) = default;
};

/// A two-bounce ghost: the ray reflects backward off `first`, travels back to
/// the earlier surface `second`, reflects forward again and continues to the
/// sensor. Indices are zero-based surface positions.
struct GhostPath {
    std::size_t first = 0;
    std::size_t second = 0;

    friend bool operator==(const GhostPath&, const GhostPath&) = default;
};

/// Ordered interfaces from object side to sensor. The light source sits
/// `object_distance` in front of the first surface (medium index 1); the
/// sensor sits `sensor_distance` behind the last one.
struct LensPrescription {
    double object_distance = 0.0;
    std::vector<Surface> surfaces;
    double sensor_distance = 0.0;
    std::optional<GhostPath> ghost;

    /// Medium index in front of surface i.
    double index_before(std::size_t i) const { return i == 0 ? 1.0 : surfaces[i - 1].index; }

    friend bool operator==(const LensPrescription&, const LensPrescription&) = default;
};

/// Throws std::invalid_argument on an empty prescription, nonpositive
/// indices, negative or non-finite distances.
void validate(const LensPrescription& lens);
void validate(const LensPrescription& lens, const GhostPath& path);

/// Object plane to sensor plane along the direct path.
TransferMatrix direct_matrix(const LensPrescription& lens);
/// Object plane to sensor plane along a ghost path.
TransferMatrix ghost_matrix(const LensPrescription& lens, const GhostPath& path);

/// Matrix sequence of a path in written order (last element acts first).
std::vector<TransferMatrix> direct_chain(const LensPrescription& lens);
std::vector<TransferMatrix> ghost_chain(const LensPrescription& lens, const GhostPath& path);

RayState trace_direct(const LensPrescription& lens, const RayState& ray);
RayState trace_ghost(const LensPrescription& lens, const RayState& ray, const GhostPath& path);

/// Step used for the central difference in the focus test.
inline constexpr double kFocusProbeStep = 1e-5;
/// |dh/dtheta| below this (mm/rad) counts as focused.
inline constexpr double kFocusTolerance = 1e-6;

/// dh/dtheta at the sensor by central difference around (h = 1, theta = 0).
double direct_defocus(const LensPrescription& lens);
double ghost_defocus(const LensPrescription& lens, const GhostPath& path);

/// Returns `lens` with its sensor distance moved so that the direct image is
/// focused (secant iteration on the sensor distance).
LensPrescription autofocus(LensPrescription lens);

class UnfocusedError : public std::runtime_error {
public:
    UnfocusedError(double direct_defocus, double ghost_defocus);

    double direct_defocus() const { return direct_; }
    double ghost_defocus() const { return ghost_; }

private:
    double direct_;
    double ghost_;
};

struct SweepGrid {
    double h_min = 0.1;
    double h_max = 1.0;
    int h_steps = 21;
    double theta_min = -0.05;
    double theta_max = 0.05;
    int theta_steps = 21;

    std::vector<double> heights() const;
    std::vector<double> angles() const;
};

struct SweepSample {
    double h;
    double theta;
    double h0;
    double h1;
};

std::vector<SweepSample> sweep(const LensPrescription& lens, const GhostPath& path,
                               const SweepGrid& grid = {});

struct GhostRatio {
    double k = 0.0;              ///< least-squares slope of h1 against h0
    double fit_residual = 0.0;   ///< max |h1 - k h0| over the grid
    double relative_std = 0.0;   ///< std(h1/h0) / |mean(h1/h0)|
    double linear_residual = 0.0;///< max residual of h1 = a h + b over the grid
    double direct_defocus = 0.0;
    double ghost_defocus = 0.0;
};

/// Ghost-to-direct height ratio. Throws UnfocusedError unless both the direct
/// and the ghost image are focused on the sensor.
GhostRatio ghost_ratio(const LensPrescription& lens, const GhostPath& path, const SweepGrid& grid = {});

/// Image position of the ghost of a light source at `light`.
std::array<double, 2> predict_flare_position(std::array<double, 2> light,
                                             std::array<double, 2> center, double k);

struct DesignOptions {
    double target_k = -1.0;
    int max_iterations = 100;
    double tolerance = 1e-14;
};

/// Newton solve on the curvatures of surfaces `free_a` and `free_b` so that
/// the ghost is focused on the (auto-focused) sensor with ratio target_k.
/// Throws std::runtime_error when the iteration does not converge.
LensPrescription design_ghost_ratio(LensPrescription lens, const GhostPath& path,
                                    std::size_t free_a, std::size_t free_b,
                                    const DesignOptions& options = {});

// --- prescription files -----------------------------------------------------

/// Parse the line-oriented prescription format:
///
///     # comment
///     object <distance>
///     surface <curvature> <thickness> <index>
///     ...
///     sensor <distance>
///     ghost <first> <second>        (optional)
///
/// The last surface's thickness must be 0; the gap to the sensor is `sensor`.
LensPrescription parse_prescription(std::string_view text);
LensPrescription load_prescription(const std::filesystem::path& path);
std::string format_prescription(const LensPrescription& lens);
void save_prescription(const std::filesystem::path& path, const LensPrescription& lens);

} // namespace flarekit::optics
