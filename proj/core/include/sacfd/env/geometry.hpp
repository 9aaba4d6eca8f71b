#pragma once

#include "sacfd/env/config.hpp"
#include "sacfd/env/route.hpp"

#include <optional>

namespace sacfd::env {

struct VehicleState {
	Vec2 position{0.0, 0.0}; // geometric centre
	double heading = 0.0;    // radians, (-pi, pi]
	double speed = 0.0;      // m/s, never negative
	int route = 0;
	double progress = 0.0; // arc length along the route
	double length = 4.5;
	double width = 1.9;

	Vec2 forward() const { return {std::cos(heading), std::sin(heading)}; }
	Vec2 front_bumper() const { return position + 0.5 * length * forward(); }
};

/// Maps any angle onto (-pi, pi].
double normalize_angle(double angle);

/// Separating-axis overlap test of the two vehicles' oriented footprints.
bool boxes_overlap(const VehicleState& a, const VehicleState& b);

/// True when `point` lies within `radius` of `apex` and within +-half_angle of `heading`.
bool in_sector(const Vec2& apex, double heading, double half_angle_rad, double radius, const Vec2& point);

/// delta = atan2(2 L sin(theta), l_d), clamped to +-max_steer.
double pure_pursuit_angle(double heading_error, double lookahead, double wheelbase, double max_steer_rad);

/// Steering toward the route point `lookahead` metres of arc ahead of the vehicle's progress.
double pure_pursuit_steering(const VehicleState& ego, const RouteGeometry& route, double lookahead, double wheelbase,
	double max_steer_rad);

/// l_d = clamp(gain * v, min, max)
double lookahead_distance(const EnvConfig& config, double speed);

} // namespace sacfd::env
