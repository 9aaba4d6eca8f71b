#include "sacfd/env/route.hpp"

#include "sacfd/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sacfd::env {

RouteGeometry::RouteGeometry(std::vector<Vec2> waypoints, bool closed) : waypoints_(std::move(waypoints)), closed_(closed)
{
	if (waypoints_.size() < 2)
	{
		throw ConfigError("a route needs at least two waypoints");
	}
	arc_.reserve(waypoints_.size() + 1);
	arc_.push_back(0.0);
	for (std::size_t i = 1; i < waypoints_.size(); ++i)
	{
		const double d = (waypoints_[i] - waypoints_[i - 1]).norm();
		if (!(d > 0.0))
		{
			throw ConfigError("route waypoints must be distinct");
		}
		arc_.push_back(arc_.back() + d);
	}
	if (closed_)
	{
		const double d = (waypoints_.front() - waypoints_.back()).norm();
		if (!(d > 0.0))
		{
			throw ConfigError("closed route repeats its first waypoint");
		}
		arc_.push_back(arc_.back() + d);
	}
}

double RouteGeometry::wrap(double s) const
{
	const double total = length();
	if (closed_)
	{
		s = std::fmod(s, total);
		return s < 0.0 ? s + total : s;
	}
	return std::clamp(s, 0.0, total);
}

RoutePoint RouteGeometry::at(double s) const
{
	s = wrap(s);
	auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
	std::size_t seg = it == arc_.begin() ? 0 : static_cast<std::size_t>(it - arc_.begin()) - 1;
	const std::size_t segments = arc_.size() - 1;
	seg = std::min(seg, segments - 1);
	const Vec2& a = waypoints_[seg];
	const Vec2& b = waypoints_[(seg + 1) % waypoints_.size()];
	const double seg_len = arc_[seg + 1] - arc_[seg];
	const double t = std::clamp((s - arc_[seg]) / seg_len, 0.0, 1.0);
	return {a + t * (b - a), (b - a) / seg_len};
}

double RouteGeometry::project_segment(const Vec2& p, std::size_t seg, double& best_d2) const
{
	const Vec2& a = waypoints_[seg];
	const Vec2& b = waypoints_[(seg + 1) % waypoints_.size()];
	const Vec2 ab = b - a;
	const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
	best_d2 = (a + t * ab - p).squaredNorm();
	return arc_[seg] + t * (arc_[seg + 1] - arc_[seg]);
}

double RouteGeometry::project(const Vec2& p, double hint, double back, double ahead) const
{
	const std::size_t segments = arc_.size() - 1;
	const double lo = hint - back;
	const double hi = hint + ahead;
	double best_s = hint;
	double best_d2 = std::numeric_limits<double>::infinity();
	auto scan = [&](double from, double to) {
		auto first = std::upper_bound(arc_.begin(), arc_.end(), from);
		std::size_t seg = first == arc_.begin() ? 0 : static_cast<std::size_t>(first - arc_.begin()) - 1;
		for (; seg < segments && arc_[seg] <= to; ++seg)
		{
			double d2 = 0.0;
			const double s = project_segment(p, seg, d2);
			if (d2 < best_d2)
			{
				best_d2 = d2;
				best_s = s;
			}
		}
	};
	if (closed_)
	{
		const double total = length();
		// scan [lo, hi] modulo the loop, in at most two pieces
		const double start = wrap(lo);
		const double span = std::min(hi - lo, total);
		if (start + span <= total)
		{
			scan(start, start + span);
		}
		else
		{
			scan(start, total);
			scan(0.0, start + span - total);
		}
	}
	else
	{
		scan(std::max(lo, 0.0), std::min(hi, length()));
	}
	return best_s;
}

double RouteGeometry::project(const Vec2& p) const
{
	const std::size_t segments = arc_.size() - 1;
	double best_s = 0.0;
	double best_d2 = std::numeric_limits<double>::infinity();
	for (std::size_t seg = 0; seg < segments; ++seg)
	{
		double d2 = 0.0;
		const double s = project_segment(p, seg, d2);
		if (d2 < best_d2)
		{
			best_d2 = d2;
			best_s = s;
		}
	}
	return best_s;
}

double RouteGeometry::curvature(double s, double span) const
{
	const Vec2 a = at(s - span).position;
	const Vec2 b = at(s).position;
	const Vec2 c = at(s + span).position;
	const Vec2 ab = b - a;
	const Vec2 bc = c - b;
	const Vec2 ac = c - a;
	const double denom = ab.norm() * bc.norm() * ac.norm();
	if (denom < 1e-12)
	{
		return 0.0;
	}
	const double cross = ab.x() * bc.y() - ab.y() * bc.x();
	return 2.0 * cross / denom;
}

void append_line(std::vector<Vec2>& points, const Vec2& from, const Vec2& to, double spacing)
{
	const double len = (to - from).norm();
	const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
	for (int i = 1; i <= n; ++i)
	{
		points.push_back(from + (to - from) * (static_cast<double>(i) / n));
	}
}

} // namespace sacfd::env
