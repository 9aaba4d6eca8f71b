#include "sacfd/env/roundabout.hpp"

#include "sacfd/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sacfd::env {

namespace {

constexpr double kPointSpacing = 0.5;
constexpr double kApproachGap = 6.0;    // inbound lane ends this far outside the ring
constexpr double kMergeAngle = 0.35;    // ring angle between an arm axis and its merge point
constexpr double kSpawnClearance = 1.0; // extra separation beyond one vehicle length
constexpr double kEgoClearZone = 20.0;  // no traffic spawns this close to the ego start
constexpr int kSpawnAttempts = 200;

double deg2rad(double deg)
{
	return deg * std::numbers::pi / 180.0;
}

Vec2 radial(double angle)
{
	return {std::cos(angle), std::sin(angle)};
}

Vec2 ccw_tangent(double angle)
{
	return {-std::sin(angle), std::cos(angle)};
}

double arm_angle(int arm)
{
	return arm * 0.5 * std::numbers::pi;
}

// Quadratic Bezier from p0 (leaving along d0) to p2 (arriving along d2).
void append_blend(std::vector<Vec2>& points, const Vec2& p0, const Vec2& d0, const Vec2& p2, const Vec2& d2)
{
	// control point: where the two tangent lines cross
	Eigen::Matrix2d m;
	m.col(0) = d0;
	m.col(1) = d2;
	Vec2 control = 0.5 * (p0 + p2);
	if (std::abs(m.determinant()) > 1e-9)
	{
		const Vec2 uv = m.colPivHouseholderQr().solve(p2 - p0);
		if (uv(0) > 0.0 && uv(1) > 0.0)
		{
			control = p0 + uv(0) * d0;
		}
	}
	const double approx_len = (control - p0).norm() + (p2 - control).norm();
	const int n = std::max(4, static_cast<int>(std::ceil(approx_len / kPointSpacing)));
	for (int i = 1; i <= n; ++i)
	{
		const double t = static_cast<double>(i) / n;
		points.push_back((1 - t) * (1 - t) * p0 + 2 * (1 - t) * t * control + t * t * p2);
	}
}

void append_arc(std::vector<Vec2>& points, double radius, double from, double to)
{
	const double sweep = to - from;
	const int n = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) * radius / kPointSpacing)));
	for (int i = 1; i <= n; ++i)
	{
		points.push_back(radius * radial(from + sweep * static_cast<double>(i) / n));
	}
}

struct BuiltRoute {
	RouteGeometry geometry;
	double exit_curve_end = 0.0;
};

BuiltRoute build_route(const EnvConfig& c, int entry, int exit)
{
	const double rr = c.ring_radius;
	const double te = arm_angle(entry);
	const double tx = arm_angle(exit);
	std::vector<Vec2> pts;

	const Vec2 far_in = (rr + c.arm_length) * radial(te) + c.lane_offset * ccw_tangent(te);
	const Vec2 near_in = (rr + kApproachGap) * radial(te) + c.lane_offset * ccw_tangent(te);
	pts.push_back(far_in);
	append_line(pts, far_in, near_in, kPointSpacing);

	const double merge = te + kMergeAngle;
	double diverge = tx - kMergeAngle;
	while (diverge <= merge)
	{
		diverge += 2.0 * std::numbers::pi;
	}
	append_blend(pts, near_in, -radial(te), rr * radial(merge), ccw_tangent(merge));
	append_arc(pts, rr, merge, diverge);

	const Vec2 near_out = (rr + kApproachGap) * radial(tx) - c.lane_offset * ccw_tangent(tx);
	const Vec2 far_out = (rr + c.arm_length) * radial(tx) - c.lane_offset * ccw_tangent(tx);
	append_blend(pts, rr * radial(diverge), ccw_tangent(diverge), near_out, radial(tx));
	const std::size_t exit_curve_end_index = pts.size() - 1;
	append_line(pts, near_out, far_out, kPointSpacing);

	RouteGeometry geometry(std::move(pts), false);
	return {geometry, geometry.arc_length()[exit_curve_end_index]};
}

} // namespace

std::string_view to_string(TerminalCause cause)
{
	switch (cause)
	{
		case TerminalCause::destination: return "destination";
		case TerminalCause::collision: return "collision";
		case TerminalCause::timeout: return "timeout";
		case TerminalCause::none: break;
	}
	return "none";
}

TerminalCause terminal_cause_from_string(std::string_view text)
{
	for (auto cause : {TerminalCause::none, TerminalCause::destination, TerminalCause::collision, TerminalCause::timeout})
	{
		if (to_string(cause) == text)
		{
			return cause;
		}
	}
	throw ConfigError("unknown terminal cause '" + std::string(text) + "'");
}

bool operator==(const VehicleState& a, const VehicleState& b)
{
	return a.position == b.position && a.heading == b.heading && a.speed == b.speed && a.route == b.route &&
		   a.progress == b.progress && a.length == b.length && a.width == b.width;
}

bool TrafficVehicle::operator==(const TrafficVehicle& other) const
{
	return state == other.state && active == other.active && stuck_steps == other.stuck_steps;
}

bool WorldState::operator==(const WorldState& other) const
{
	return ego == other.ego && previous_action == other.previous_action && traffic == other.traffic &&
		   step == other.step && rng == other.rng;
}

RouteGeometry ring_route(double radius, double spacing)
{
	std::vector<Vec2> pts;
	const int n = std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / spacing)));
	for (int i = 0; i < n; ++i)
	{
		pts.push_back(radius * radial(2.0 * std::numbers::pi * i / n));
	}
	return RouteGeometry(std::move(pts), true);
}

Roundabout::Roundabout(EnvConfig config) : config_(std::move(config))
{
	config_.validate();
	for (int entry = 0; entry < 4; ++entry)
	{
		for (int exit = 0; exit < 4; ++exit)
		{
			if (entry == exit)
			{
				continue;
			}
			auto built = build_route(config_, entry, exit);
			if (entry == config_.ego_entry_arm && exit == config_.ego_exit_arm)
			{
				ego_route_ = static_cast<int>(routes_.size());
				destination_start_ = built.exit_curve_end + config_.destination_offset;
			}
			routes_.push_back(std::move(built.geometry));
			route_arms_.emplace_back(entry, exit);
		}
	}
	if (destination_end() > routes_[static_cast<std::size_t>(ego_route_)].length())
	{
		throw ConfigError("destination window lies beyond the end of the exit arm");
	}
}

void Roundabout::place_on_route(VehicleState& v, int route, double progress) const
{
	const auto& geometry = routes_[static_cast<std::size_t>(route)];
	const auto point = geometry.at(progress);
	v.route = route;
	v.progress = progress;
	v.position = point.position;
	v.heading = normalize_angle(std::atan2(point.tangent.y(), point.tangent.x()));
	v.length = config_.vehicle_length;
	v.width = config_.vehicle_width;
}

bool Roundabout::position_free(const WorldState& world, const Vec2& p, double clearance, int skip_traffic) const
{
	const double c2 = clearance * clearance;
	if ((world.ego.position - p).squaredNorm() < kEgoClearZone * kEgoClearZone)
	{
		return false;
	}
	for (std::size_t i = 0; i < world.traffic.size(); ++i)
	{
		if (static_cast<int>(i) == skip_traffic || !world.traffic[i].active)
		{
			continue;
		}
		if ((world.traffic[i].state.position - p).squaredNorm() < c2)
		{
			return false;
		}
	}
	return true;
}

WorldState Roundabout::spawn(std::uint64_t seed) const
{
	WorldState world;
	world.rng.seed(seed);
	std::uniform_real_distribution<double> jitter(-config_.spawn_jitter, config_.spawn_jitter);
	place_on_route(world.ego, ego_route_, config_.spawn_position + jitter(world.rng));
	world.ego.speed = 0.0;

	const int route_count = static_cast<int>(routes_.size());
	std::uniform_int_distribution<int> pick_route(0, route_count - 1);
	std::uniform_real_distribution<double> unit(0.0, 1.0);
	const double separation = config_.vehicle_length + kSpawnClearance;
	for (int i = 0; i < config_.n_traffic; ++i)
	{
		bool placed = false;
		for (int attempt = 0; attempt < kSpawnAttempts && !placed; ++attempt)
		{
			const int route = pick_route(world.rng);
			const double span = routes_[static_cast<std::size_t>(route)].length() - config_.vehicle_length;
			TrafficVehicle candidate;
			place_on_route(candidate.state, route, unit(world.rng) * span);
			if (position_free(world, candidate.state.position, separation, -1))
			{
				candidate.state.speed = config_.traffic_speed;
				world.traffic.push_back(candidate);
				placed = true;
			}
		}
		if (!placed)
		{
			spdlog::warn("roundabout: placed only {} of {} traffic vehicles without overlap", world.traffic.size(), config_.n_traffic);
			break;
		}
	}
	return world;
}

void Roundabout::respawn(WorldState& world, std::size_t index) const
{
	auto& vehicle = world.traffic[index];
	std::uniform_int_distribution<int> pick_route(0, static_cast<int>(routes_.size()) - 1);
	const int route = pick_route(world.rng);
	VehicleState candidate;
	place_on_route(candidate, route, 0.0);
	if (position_free(world, candidate.position, 2.0 * config_.vehicle_length, static_cast<int>(index)))
	{
		candidate.speed = config_.traffic_speed;
		vehicle.state = candidate;
		vehicle.active = true;
	}
	else
	{
		vehicle.active = false;
	}
	vehicle.stuck_steps = 0;
}

bool Roundabout::predicted_conflict(const VehicleState& self, const VehicleState& other, bool other_has_priority) const
{
	const Vec2 rel = other.position - self.position;
	const double reach = config_.traffic_predict_horizon * (self.speed + other.speed) + self.length + other.length;
	if (rel.squaredNorm() > reach * reach)
	{
		return false;
	}
	const double bearing_to_other = std::abs(normalize_angle(std::atan2(rel.y(), rel.x()) - self.heading));
	if (bearing_to_other > 0.5 * std::numbers::pi)
	{
		return false;
	}
	// between two traffic vehicles, the one with the other more squarely in front gives way
	const double bearing_to_self = std::abs(normalize_angle(std::atan2(-rel.y(), -rel.x()) - other.heading));
	if (!other_has_priority && bearing_to_other > bearing_to_self)
	{
		return false;
	}
	VehicleState a = self;
	VehicleState b = other;
	a.length += 2.0 * config_.traffic_predict_margin;
	a.width += config_.traffic_predict_margin;
	b.length += 2.0 * config_.traffic_predict_margin;
	b.width += config_.traffic_predict_margin;
	constexpr double kProbeStep = 0.25;
	for (double t = kProbeStep; t <= config_.traffic_predict_horizon + 1e-9; t += kProbeStep)
	{
		a.position = self.position + self.speed * t * self.forward();
		b.position = other.position + other.speed * t * other.forward();
		if (boxes_overlap(a, b))
		{
			return true;
		}
	}
	return false;
}

double Roundabout::traffic_accel(const WorldState& world, std::size_t index) const
{
	const auto& self = world.traffic[index].state;
	const double half_angle = deg2rad(config_.traffic_sector_angle_deg);
	const Vec2 apex = self.front_bumper();
	const bool predict = config_.traffic_predict_horizon > 0.0;
	auto danger_from = [&](const VehicleState& other, bool other_has_priority) {
		return in_sector(apex, self.heading, half_angle, config_.traffic_sector_radius, other.position) ||
			   (predict && predicted_conflict(self, other, other_has_priority));
	};
	bool danger = danger_from(world.ego, true);
	for (std::size_t j = 0; j < world.traffic.size() && !danger; ++j)
	{
		if (j != index && world.traffic[j].active)
		{
			danger = danger_from(world.traffic[j].state, false);
		}
	}
	if (danger)
	{
		return -config_.b_max;
	}
	return std::clamp(config_.traffic_gain * (config_.traffic_speed - self.speed), -config_.b_max, config_.a_max);
}

ZoneHits Roundabout::detect_zones(const WorldState& world) const
{
	ZoneHits hits;
	const Vec2 apex = world.ego.front_bumper();
	const double h = world.ego.heading;
	const double half1 = deg2rad(config_.zone1.angle_deg);
	const double half2 = deg2rad(config_.zone2.angle_deg);
	for (std::size_t i = 0; i < world.traffic.size(); ++i)
	{
		if (!world.traffic[i].active)
		{
			continue;
		}
		const Vec2& p = world.traffic[i].state.position;
		const double d = (p - apex).norm();
		if (in_sector(apex, h, half1, config_.zone1.radius, p) && (!hits.d1 || d < *hits.d1))
		{
			hits.d1 = d;
			hits.vehicle1 = static_cast<int>(i);
		}
		if (in_sector(apex, h, half2, config_.zone2.radius, p) && (!hits.d2 || d < *hits.d2))
		{
			hits.d2 = d;
			hits.vehicle2 = static_cast<int>(i);
		}
	}
	return hits;
}

bool Roundabout::check_collision(const WorldState& world) const
{
	return std::any_of(world.traffic.begin(), world.traffic.end(),
		[&](const TrafficVehicle& t) { return t.active && boxes_overlap(world.ego, t.state); });
}

double Roundabout::safety_shield(double action, const WorldState& world) const
{
	const auto hits = detect_zones(world);
	if (hits.d2 && *hits.d2 < config_.d_brake && world.ego.speed > 0.5)
	{
		return -1.0;
	}
	return action;
}

double Roundabout::ego_steering(const VehicleState& ego) const
{
	return pure_pursuit_steering(ego, routes_[static_cast<std::size_t>(ego.route)], lookahead_distance(config_, ego.speed),
		config_.wheelbase, deg2rad(config_.max_steer_deg));
}

double Roundabout::cross_track_error(const VehicleState& ego) const
{
	const auto& route = routes_[static_cast<std::size_t>(ego.route)];
	return (route.at(route.project(ego.position, ego.progress)).position - ego.position).norm();
}

Observation Roundabout::observe(const WorldState& world) const
{
	const auto& ego = world.ego;
	const auto hits = detect_zones(world);
	const auto& route = routes_[static_cast<std::size_t>(ego.route)];
	Observation obs{};
	obs[0] = std::clamp(ego.speed / config_.v_max, 0.0, 1.0);
	obs[1] = hits.d1 ? (config_.zone1.radius - *hits.d1) / config_.zone1.radius : 0.0;
	obs[2] = hits.d2 ? (config_.zone2.radius - *hits.d2) / config_.zone2.radius : 0.0;
	const int leader = hits.vehicle2 >= 0 ? hits.vehicle2 : hits.vehicle1;
	if (leader >= 0)
	{
		const auto& other = world.traffic[static_cast<std::size_t>(leader)].state;
		const double along = other.speed * std::cos(other.heading - ego.heading);
		obs[3] = std::clamp((along - ego.speed) / config_.v_max, -1.0, 1.0);
	}
	obs[4] = std::clamp(ego.progress / destination_start_, 0.0, 1.0);
	obs[5] = std::clamp(route.curvature(ego.progress + lookahead_distance(config_, ego.speed)) * config_.ring_radius, -1.0, 1.0);
	obs[6] = world.previous_action;
	return obs;
}

StepResult Roundabout::step(WorldState& world, double action) const
{
	double a = std::clamp(action, -1.0, 1.0);
	if (config_.shield)
	{
		a = safety_shield(a, world);
	}
	const double dt = config_.dt;

	// traffic decisions are taken on the pre-step world
	std::vector<double> traffic_accels(world.traffic.size(), 0.0);
	for (std::size_t i = 0; i < world.traffic.size(); ++i)
	{
		if (world.traffic[i].active)
		{
			traffic_accels[i] = traffic_accel(world, i);
		}
	}

	auto& ego = world.ego;
	const double accel = a >= 0.0 ? a * config_.a_max : a * config_.b_max;
	const double steer = ego_steering(ego);
	const double v = ego.speed;
	ego.position += v * dt * ego.forward();
	ego.heading = normalize_angle(ego.heading + v / config_.wheelbase * std::tan(steer) * dt);
	ego.speed = std::max(0.0, v + accel * dt);
	ego.progress = routes_[static_cast<std::size_t>(ego.route)].project(ego.position, ego.progress);
	world.previous_action = a;

	for (std::size_t i = 0; i < world.traffic.size(); ++i)
	{
		auto& t = world.traffic[i];
		if (!t.active)
		{
			respawn(world, i);
			continue;
		}
		const double tv = t.state.speed;
		const double next_progress = t.state.progress + tv * dt;
		t.state.speed = std::max(0.0, tv + traffic_accels[i] * dt);
		if (next_progress >= routes_[static_cast<std::size_t>(t.state.route)].length())
		{
			respawn(world, i);
			continue;
		}
		const double speed = t.state.speed;
		place_on_route(t.state, t.state.route, next_progress);
		t.state.speed = speed;
		t.stuck_steps = speed < 0.1 ? t.stuck_steps + 1 : 0;
		if (t.stuck_steps >= config_.traffic_stuck_steps)
		{
			respawn(world, i);
		}
	}
	world.step += 1;

	StepResult result;
	result.applied_action = a;
	const bool collision = check_collision(world);
	result.zones = detect_zones(world);
	result.components = compute_reward({ego.speed, a, result.zones.d1, result.zones.d2, collision}, config_);
	result.reward = result.components.total;
	if (collision)
	{
		result.cause = TerminalCause::collision;
	}
	else if (ego.progress >= destination_start_)
	{
		result.cause = TerminalCause::destination;
	}
	else if (world.step >= config_.max_steps)
	{
		result.cause = TerminalCause::timeout;
	}
	result.terminal = result.cause != TerminalCause::none;
	result.observation = observe(world);
	return result;
}

RoundaboutEnv::RoundaboutEnv(EnvConfig config) : roundabout_(std::move(config)), seeder_(roundabout_.config().seed)
{
	reset();
}

Observation RoundaboutEnv::reset()
{
	return reset(seeder_());
}

Observation RoundaboutEnv::reset(std::uint64_t episode_seed)
{
	episode_seed_ = episode_seed;
	world_ = roundabout_.spawn(episode_seed);
	return roundabout_.observe(world_);
}

StepResult RoundaboutEnv::step(double action)
{
	return roundabout_.step(world_, action);
}

} // namespace sacfd::env
