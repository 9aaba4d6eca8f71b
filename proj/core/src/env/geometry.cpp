#include "sacfd/env/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace sacfd::env {

double normalize_angle(double angle)
{
	constexpr double two_pi = 2.0 * std::numbers::pi;
	angle = std::fmod(angle, two_pi);
	if (angle <= -std::numbers::pi)
	{
		angle += two_pi;
	}
	else if (angle > std::numbers::pi)
	{
		angle -= two_pi;
	}
	return angle;
}

namespace {

std::array<Vec2, 4> corners(const VehicleState& v)
{
	const Vec2 f = v.forward() * (0.5 * v.length);
	const Vec2 l = Vec2(-std::sin(v.heading), std::cos(v.heading)) * (0.5 * v.width);
	return {v.position + f + l, v.position + f - l, v.position - f - l, v.position - f + l};
}

bool separated_along(const Vec2& axis, const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b)
{
	auto [a_min, a_max] = std::minmax({axis.dot(a[0]), axis.dot(a[1]), axis.dot(a[2]), axis.dot(a[3])});
	auto [b_min, b_max] = std::minmax({axis.dot(b[0]), axis.dot(b[1]), axis.dot(b[2]), axis.dot(b[3])});
	return a_max < b_min || b_max < a_min;
}

} // namespace

bool boxes_overlap(const VehicleState& a, const VehicleState& b)
{
	const double reach = 0.5 * (std::hypot(a.length, a.width) + std::hypot(b.length, b.width));
	if ((a.position - b.position).squaredNorm() > reach * reach)
	{
		return false;
	}
	const auto ca = corners(a);
	const auto cb = corners(b);
	for (const double heading : {a.heading, b.heading})
	{
		const Vec2 ax(std::cos(heading), std::sin(heading));
		const Vec2 ay(-std::sin(heading), std::cos(heading));
		if (separated_along(ax, ca, cb) || separated_along(ay, ca, cb))
		{
			return false;
		}
	}
	return true;
}

bool in_sector(const Vec2& apex, double heading, double half_angle_rad, double radius, const Vec2& point)
{
	const Vec2 rel = point - apex;
	const double dist = rel.norm();
	if (dist > radius)
	{
		return false;
	}
	if (dist == 0.0)
	{
		return true;
	}
	const double bearing = normalize_angle(std::atan2(rel.y(), rel.x()) - heading);
	return std::abs(bearing) <= half_angle_rad;
}

double pure_pursuit_angle(double heading_error, double lookahead, double wheelbase, double max_steer_rad)
{
	const double delta = std::atan2(2.0 * wheelbase * std::sin(heading_error), lookahead);
	return std::clamp(delta, -max_steer_rad, max_steer_rad);
}

double pure_pursuit_steering(const VehicleState& ego, const RouteGeometry& route, double lookahead, double wheelbase,
	double max_steer_rad)
{
	const Vec2 target = route.at(ego.progress + lookahead).position;
	const Vec2 rel = target - ego.position;
	const double dist = rel.norm();
	if (dist < 1e-9)
	{
		return 0.0;
	}
	const double heading_error = normalize_angle(std::atan2(rel.y(), rel.x()) - ego.heading);
	return pure_pursuit_angle(heading_error, dist, wheelbase, max_steer_rad);
}

double lookahead_distance(const EnvConfig& config, double speed)
{
	return std::clamp(config.lookahead_gain * speed, config.lookahead_min, config.lookahead_max);
}

} // namespace sacfd::env
