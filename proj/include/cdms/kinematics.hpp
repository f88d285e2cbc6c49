#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string_view>

namespace cdms {

inline constexpr std::size_t kSegments = 30;
inline constexpr std::size_t kMarkers = 30;
inline constexpr std::size_t kFbgNodes = 4;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(const Vec2& a, const Vec2& b);

// Planar CDM geometry and actuation calibration. Lengths in mm, angles in rad.
struct CdmConfig {
    double dexterous_length = 35.0;
    std::size_t n_segments = kSegments;
    double outer_radius = 3.0;
    double max_cable_disp = 5.0;
    double max_tip_angle = 81.0 * std::numbers::pi / 180.0;
    std::array<double, kFbgNodes> fbg_node_arclengths{4.0, 12.0, 20.0, 28.0};
    double fiber_offset = 0.25;

    double segment_length() const { return dexterous_length / static_cast<double>(n_segments); }
    double marker_spacing() const { return dexterous_length / static_cast<double>(kMarkers - 1); }

    // Throws ConfigError on the first violated invariant.
    void validate() const;
};

// One signed curvature per segment (1/mm, positive bends toward +y).
struct CurvatureProfile {
    std::array<double, kSegments> kappa{};

    friend bool operator==(const CurvatureProfile&, const CurvatureProfile&) = default;
};

using MarkerSet = std::array<Vec2, kMarkers>;

// Marker k sits at arclength k * L / 29, so marker 1 is the base origin and
// marker 30 is the tip. The base tangent points along +x.
struct ShapeFrame {
    MarkerSet markers{};
    double tip_angle = 0.0;
};

enum class Placement { BaseLeft, CenterLeft, TipLeft, BaseRight, CenterRight, TipRight };

std::string_view to_string(Placement placement);
std::optional<Placement> placement_from_string(std::string_view name);

struct Obstacle {
    Vec2 center{};
    double radius = 10.0;
    Placement placement = Placement::CenterRight;

    // Throws ConfigError if the radius is non-positive or the obstacle
    // intersects the straight CDM.
    void validate(const CdmConfig& config) const;
};

// Default obstacle for each of the six placements; right-side placements are
// mirror images of the left ones.
Obstacle default_obstacle(Placement placement);

struct SolverOptions {
    double beta = 1e4;
    double gamma = 10.0;
    int max_iters = 500;
    double fd_step = 1e-6;
    double penetration_tol = 0.05;
    double rel_tol = 1e-8;
    int continuation_steps = 8;
};

struct ConstrainedSolution {
    CurvatureProfile profile;
    double objective = 0.0;
    double penetration = 0.0;
    int iterations = 0;
};

// Uniform profile calibrated so that max_cable_disp maps to max_tip_angle.
CurvatureProfile free_bend_curvature(double delta, const CdmConfig& config);

ShapeFrame shape_from_curvatures(const CurvatureProfile& profile, const CdmConfig& config);

// Point on the centerline at arclength s in [0, L].
Vec2 centerline_point(const CurvatureProfile& profile, const CdmConfig& config, double s);

double tip_angle(const CurvatureProfile& profile, const CdmConfig& config);

// max_i (obstacle.radius + outer_radius - |p_i - center|) over the markers.
double max_penetration(const ShapeFrame& shape, const Obstacle& obstacle, const CdmConfig& config);

// Penalty objective minimized by constrained_bend.
double bend_objective(const CurvatureProfile& profile, const CurvatureProfile& free_profile,
                      const Obstacle& obstacle, const CdmConfig& config, const SolverOptions& opts);

// Shape of the CDM pressed against an obstacle. `warm_start` seeds the
// solver with a nearby solution; without it the solve ramps delta up from
// zero. Throws SolverError if the termination test is not met.
ConstrainedSolution constrained_bend(double delta, const Obstacle& obstacle, const CdmConfig& config,
                                     const SolverOptions& opts = {},
                                     const CurvatureProfile* warm_start = nullptr);

}  // namespace cdms
