#pragma once

#include <Eigen/Dense>

#include <vector>

namespace sacfd::env {

using Vec2 = Eigen::Vector2d;

struct RoutePoint {
	Vec2 position;
	Vec2 tangent; // unit
};

/// Polyline path with cumulative arc length, looked up by distance along it.
class RouteGeometry {
public:
	RouteGeometry() = default;
	/// Consecutive duplicate waypoints are rejected. For closed routes the last point
	/// connects back to the first.
	RouteGeometry(std::vector<Vec2> waypoints, bool closed);

	const std::vector<Vec2>& waypoints() const { return waypoints_; }
	const std::vector<double>& arc_length() const { return arc_; }
	double length() const { return arc_.back(); }
	bool closed() const { return closed_; }

	/// Point at arc length s; clamped to the ends of an open route, wrapped on a closed one.
	RoutePoint at(double s) const;

	/// Arc length of the closest point to p, searched within [hint - back, hint + ahead].
	double project(const Vec2& p, double hint, double back = 5.0, double ahead = 15.0) const;
	/// Exhaustive projection over the whole route.
	double project(const Vec2& p) const;

	/// Signed curvature from three points spaced `span` apart around s (positive = left turn).
	double curvature(double s, double span = 3.0) const;

private:
	double wrap(double s) const;
	double project_segment(const Vec2& p, std::size_t seg, double& best_d2) const;

	std::vector<Vec2> waypoints_;
	std::vector<double> arc_;
	bool closed_ = false;
};

/// Appends the points of a straight segment from `from` (exclusive) to `to` (inclusive).
void append_line(std::vector<Vec2>& points, const Vec2& from, const Vec2& to, double spacing);

} // namespace sacfd::env
