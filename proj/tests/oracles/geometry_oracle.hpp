#pragma once

// Brute-force geometric checks used as references for the library's collision and zone tests.

#include <array>
#include <cmath>
#include <limits>

namespace oracle {

struct Box {
	double cx, cy, heading, length, width;
};

inline std::array<std::array<double, 2>, 4> corners(const Box& b)
{
	const double c = std::cos(b.heading);
	const double s = std::sin(b.heading);
	const double hl = b.length / 2.0;
	const double hw = b.width / 2.0;
	std::array<std::array<double, 2>, 4> out{};
	const double sx[4] = {1, 1, -1, -1};
	const double sy[4] = {1, -1, -1, 1};
	for (int i = 0; i < 4; ++i)
	{
		out[i] = {b.cx + sx[i] * hl * c - sy[i] * hw * s, b.cy + sx[i] * hl * s + sy[i] * hw * c};
	}
	return out;
}

/// Separating-axis theorem over every edge normal of both rectangles, by projecting all corners.
inline bool overlap(const Box& a, const Box& b)
{
	const auto ca = corners(a);
	const auto cb = corners(b);
	for (const auto* poly : {&ca, &cb})
	{
		for (int e = 0; e < 4; ++e)
		{
			const auto& p0 = (*poly)[e];
			const auto& p1 = (*poly)[(e + 1) % 4];
			const double nx = -(p1[1] - p0[1]);
			const double ny = p1[0] - p0[0];
			double amin = std::numeric_limits<double>::infinity(), amax = -amin;
			double bmin = amin, bmax = -amin;
			for (const auto& p : ca)
			{
				const double d = p[0] * nx + p[1] * ny;
				amin = std::fmin(amin, d);
				amax = std::fmax(amax, d);
			}
			for (const auto& p : cb)
			{
				const double d = p[0] * nx + p[1] * ny;
				bmin = std::fmin(bmin, d);
				bmax = std::fmax(bmax, d);
			}
			if (amax < bmin || bmax < amin)
			{
				return false;
			}
		}
	}
	return true;
}

/// Point-in-sector by explicit bearing and range.
inline bool in_fan(double ax, double ay, double heading, double half_angle_deg, double radius, double px, double py)
{
	const double dx = px - ax;
	const double dy = py - ay;
	const double range = std::hypot(dx, dy);
	if (range > radius)
	{
		return false;
	}
	if (range == 0.0)
	{
		return true;
	}
	double bearing = std::atan2(dy, dx) - heading;
	while (bearing > M_PI)
	{
		bearing -= 2 * M_PI;
	}
	while (bearing <= -M_PI)
	{
		bearing += 2 * M_PI;
	}
	return std::abs(bearing) * 180.0 / M_PI <= half_angle_deg;
}

} // namespace oracle
