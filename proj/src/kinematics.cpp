#include "cdms/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "cdms/errors.hpp"

namespace cdms {

namespace {

struct Pose {
    Vec2 p;
    double heading = 0.0;
};

// Exact circular-arc step of length u with curvature kappa.
Pose advance(const Pose& from, double kappa, double u) {
    const double turn = kappa * u;
    const double chord = kappa == 0.0 ? u : 2.0 * std::sin(0.5 * turn) / kappa;
    const double dir = from.heading + 0.5 * turn;
    return {{from.p.x + chord * std::cos(dir), from.p.y + chord * std::sin(dir)}, from.heading + turn};
}

std::array<Pose, kSegments + 1> segment_nodes(const CurvatureProfile& profile, double seg_len) {
    std::array<Pose, kSegments + 1> nodes{};
    for (std::size_t i = 0; i < kSegments; ++i) {
        nodes[i + 1] = advance(nodes[i], profile.kappa[i], seg_len);
    }
    return nodes;
}

Vec2 point_at(const std::array<Pose, kSegments + 1>& nodes, const CurvatureProfile& profile,
              double seg_len, double s) {
    auto seg = static_cast<std::size_t>(std::floor(s / seg_len));
    seg = std::min(seg, kSegments - 1);
    const double u = s - static_cast<double>(seg) * seg_len;
    if (u == 0.0) {
        return nodes[seg].p;
    }
    return advance(nodes[seg], profile.kappa[seg], u).p;
}

std::array<double, kMarkers> penalty_residuals(const CurvatureProfile& profile, const Obstacle& obstacle,
                                               const CdmConfig& config, double sqrt_beta) {
    const ShapeFrame shape = shape_from_curvatures(profile, config);
    const double clearance = obstacle.radius + config.outer_radius;
    std::array<double, kMarkers> r{};
    for (std::size_t k = 0; k < kMarkers; ++k) {
        r[k] = sqrt_beta * std::max(0.0, clearance - distance(shape.markers[k], obstacle.center));
    }
    return r;
}

double penetration_of(const CurvatureProfile& profile, const Obstacle& obstacle, const CdmConfig& config) {
    return max_penetration(shape_from_curvatures(profile, config), obstacle, config);
}

ConstrainedSolution solve_from(const CurvatureProfile& free_profile, const CurvatureProfile& start,
                               const Obstacle& obstacle, const CdmConfig& config, const SolverOptions& opts) {
    constexpr int n = static_cast<int>(kSegments);
    const double sqrt_beta = std::sqrt(opts.beta);
    const double sqrt_gamma = std::sqrt(opts.gamma);

    // Rows: fidelity (30), smoothness (29), obstacle penalty (30).
    constexpr int n_rows = n + (n - 1) + static_cast<int>(kMarkers);
    auto residuals = [&](const CurvatureProfile& prof) {
        Eigen::VectorXd r(n_rows);
        for (int i = 0; i < n; ++i) {
            r(i) = prof.kappa[i] - free_profile.kappa[i];
        }
        for (int i = 0; i + 1 < n; ++i) {
            r(n + i) = sqrt_gamma * (prof.kappa[i + 1] - prof.kappa[i]);
        }
        const auto pen = penalty_residuals(prof, obstacle, config, sqrt_beta);
        for (std::size_t k = 0; k < kMarkers; ++k) {
            r(2 * n - 1 + static_cast<int>(k)) = pen[k];
        }
        return r;
    };

    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_rows, n);
    for (int i = 0; i < n; ++i) {
        jac(i, i) = 1.0;
    }
    for (int i = 0; i + 1 < n; ++i) {
        jac(n + i, i) = -sqrt_gamma;
        jac(n + i, i + 1) = sqrt_gamma;
    }

    CurvatureProfile current = start;
    Eigen::VectorXd r = residuals(current);
    double objective = r.squaredNorm();
    int iter = 0;

    if (objective == 0.0) {
        return {current, 0.0, penetration_of(current, obstacle, config), 0};
    }

    while (iter < opts.max_iters) {
        ++iter;
        for (int j = 0; j < n; ++j) {
            CurvatureProfile plus = current;
            CurvatureProfile minus = current;
            plus.kappa[j] += opts.fd_step;
            minus.kappa[j] -= opts.fd_step;
            const auto rp = penalty_residuals(plus, obstacle, config, sqrt_beta);
            const auto rm = penalty_residuals(minus, obstacle, config, sqrt_beta);
            for (std::size_t k = 0; k < kMarkers; ++k) {
                jac(2 * n - 1 + static_cast<int>(k), j) = (rp[k] - rm[k]) / (2.0 * opts.fd_step);
            }
        }

        const Eigen::VectorXd grad = jac.transpose() * r;
        const Eigen::MatrixXd normal = jac.transpose() * jac;
        const Eigen::VectorXd step = normal.ldlt().solve(-grad);
        const double slope = 2.0 * grad.dot(step);

        bool accepted = false;
        CurvatureProfile trial = current;
        Eigen::VectorXd trial_r;
        double trial_obj = objective;
        if (slope < 0.0) {
            double t = 1.0;
            for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
                for (int i = 0; i < n; ++i) {
                    trial.kappa[i] = current.kappa[i] + t * step(i);
                }
                trial_r = residuals(trial);
                trial_obj = trial_r.squaredNorm();
                if (trial_obj <= objective + 1e-4 * t * slope) {
                    accepted = true;
                    break;
                }
            }
        }

        double rel_decrease = 0.0;
        if (accepted) {
            rel_decrease = (objective - trial_obj) / objective;
            current = trial;
            r = trial_r;
            objective = trial_obj;
        }

        const double pen = penetration_of(current, obstacle, config);
        if (objective == 0.0 || (pen <= opts.penetration_tol && rel_decrease < opts.rel_tol)) {
            return {current, objective, pen, iter};
        }
        if (!accepted) {
            break;
        }
    }

    const double pen = penetration_of(current, obstacle, config);
    std::ostringstream msg;
    msg << "constrained bend did not converge after " << iter << " iterations (penetration " << pen
        << " mm)";
    throw SolverError(msg.str(), pen, iter);
}

}  // namespace

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void CdmConfig::validate() const {
    if (!(dexterous_length > 0.0)) {
        throw ConfigError("dexterous_length must be positive");
    }
    if (n_segments != kSegments) {
        throw ConfigError("n_segments must be 30");
    }
    if (!(outer_radius > 0.0)) {
        throw ConfigError("outer_radius must be positive");
    }
    if (!(max_cable_disp > 0.0) || !(max_tip_angle > 0.0)) {
        throw ConfigError("max_cable_disp and max_tip_angle must be positive");
    }
    for (std::size_t j = 0; j < kFbgNodes; ++j) {
        const double s = fbg_node_arclengths[j];
        if (s < 0.0 || s > dexterous_length) {
            throw ConfigError("fbg node " + std::to_string(j + 1) + " lies outside the dexterous length");
        }
        if (j > 0 && std::abs(s - fbg_node_arclengths[j - 1] - 8.0) > 1e-9) {
            throw ConfigError("fbg nodes must be strictly increasing with 8 mm spacing");
        }
    }
}

std::string_view to_string(Placement placement) {
    switch (placement) {
        case Placement::BaseLeft: return "BaseLeft";
        case Placement::CenterLeft: return "CenterLeft";
        case Placement::TipLeft: return "TipLeft";
        case Placement::BaseRight: return "BaseRight";
        case Placement::CenterRight: return "CenterRight";
        case Placement::TipRight: return "TipRight";
    }
    return "?";
}

std::optional<Placement> placement_from_string(std::string_view name) {
    for (auto p : {Placement::BaseLeft, Placement::CenterLeft, Placement::TipLeft, Placement::BaseRight,
                   Placement::CenterRight, Placement::TipRight}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    return std::nullopt;
}

void Obstacle::validate(const CdmConfig& config) const {
    if (!(radius > 0.0)) {
        throw ConfigError("obstacle radius must be positive");
    }
    const double x = std::clamp(center.x, 0.0, config.dexterous_length);
    if (distance(center, {x, 0.0}) <= radius + config.outer_radius) {
        throw ConfigError("obstacle " + std::string(to_string(placement)) + " intersects the straight CDM");
    }
}

Obstacle default_obstacle(Placement placement) {
    switch (placement) {
        case Placement::BaseLeft: return {{8.0, 14.5}, 10.0, placement};
        case Placement::CenterLeft: return {{18.0, 16.0}, 10.0, placement};
        case Placement::TipLeft: return {{33.0, 15.0}, 10.0, placement};
        case Placement::BaseRight: return {{8.0, -14.5}, 10.0, placement};
        case Placement::CenterRight: return {{18.0, -16.0}, 10.0, placement};
        case Placement::TipRight: return {{33.0, -15.0}, 10.0, placement};
    }
    return {};
}

CurvatureProfile free_bend_curvature(double delta, const CdmConfig& config) {
    if (!(std::abs(delta) <= config.max_cable_disp)) {
        std::ostringstream msg;
        msg << "cable displacement " << delta << " mm exceeds max_cable_disp " << config.max_cable_disp << " mm";
        throw RangeError(msg.str());
    }
    CurvatureProfile profile;
    profile.kappa.fill(config.max_tip_angle / config.max_cable_disp * delta / config.dexterous_length);
    return profile;
}

ShapeFrame shape_from_curvatures(const CurvatureProfile& profile, const CdmConfig& config) {
    const double seg_len = config.segment_length();
    const auto nodes = segment_nodes(profile, seg_len);
    ShapeFrame shape;
    const double spacing = config.marker_spacing();
    for (std::size_t k = 1; k + 1 < kMarkers; ++k) {
        shape.markers[k] = point_at(nodes, profile, seg_len, static_cast<double>(k) * spacing);
    }
    shape.markers.back() = nodes.back().p;
    shape.tip_angle = tip_angle(profile, config);
    return shape;
}

Vec2 centerline_point(const CurvatureProfile& profile, const CdmConfig& config, double s) {
    if (s < 0.0 || s > config.dexterous_length) {
        throw RangeError("arclength outside the dexterous length");
    }
    const double seg_len = config.segment_length();
    return point_at(segment_nodes(profile, seg_len), profile, seg_len, s);
}

double tip_angle(const CurvatureProfile& profile, const CdmConfig& config) {
    double sum = 0.0;
    for (double k : profile.kappa) {
        sum += k;
    }
    return sum * config.segment_length();
}

double max_penetration(const ShapeFrame& shape, const Obstacle& obstacle, const CdmConfig& config) {
    const double clearance = obstacle.radius + config.outer_radius;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& m : shape.markers) {
        worst = std::max(worst, clearance - distance(m, obstacle.center));
    }
    return worst;
}

double bend_objective(const CurvatureProfile& profile, const CurvatureProfile& free_profile,
                      const Obstacle& obstacle, const CdmConfig& config, const SolverOptions& opts) {
    double fidelity = 0.0;
    double smooth = 0.0;
    for (std::size_t i = 0; i < kSegments; ++i) {
        const double d = profile.kappa[i] - free_profile.kappa[i];
        fidelity += d * d;
        if (i + 1 < kSegments) {
            const double s = profile.kappa[i + 1] - profile.kappa[i];
            smooth += s * s;
        }
    }
    const auto pen = penalty_residuals(profile, obstacle, config, 1.0);
    double penalty = 0.0;
    for (double p : pen) {
        penalty += p * p;
    }
    return fidelity + opts.gamma * smooth + opts.beta * penalty;
}

ConstrainedSolution constrained_bend(double delta, const Obstacle& obstacle, const CdmConfig& config,
                                     const SolverOptions& opts, const CurvatureProfile* warm_start) {
    const CurvatureProfile free_profile = free_bend_curvature(delta, config);
    if (penetration_of(free_profile, obstacle, config) <= 0.0) {
        return {free_profile, 0.0, penetration_of(free_profile, obstacle, config), 0};
    }
    if (warm_start != nullptr) {
        return solve_from(free_profile, *warm_start, obstacle, config, opts);
    }

    const int steps = std::max(1, opts.continuation_steps);
    CurvatureProfile guess{};
    int total_iters = 0;
    ConstrainedSolution sol;
    for (int s = 1; s <= steps; ++s) {
        const double partial = delta * static_cast<double>(s) / static_cast<double>(steps);
        const CurvatureProfile partial_free = free_bend_curvature(partial, config);
        if (penetration_of(partial_free, obstacle, config) <= 0.0) {
            sol = {partial_free, 0.0, penetration_of(partial_free, obstacle, config), 0};
        } else {
            sol = solve_from(partial_free, guess, obstacle, config, opts);
        }
        total_iters += sol.iterations;
        guess = sol.profile;
    }
    sol.iterations = total_iters;
    return sol;
}

}  // namespace cdms
