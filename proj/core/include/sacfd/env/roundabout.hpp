#pragma once

#include "sacfd/env/config.hpp"
#include "sacfd/env/geometry.hpp"
#include "sacfd/env/reward.hpp"
#include "sacfd/env/route.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace sacfd::env {

inline constexpr int kObservationSize = 7;
inline constexpr int kObservationVersion = 1;

/// [speed / v_max, zone-1 proximity, zone-2 proximity, leader relative speed,
///  route progress fraction, curvature at lookahead, previous action], each in [-1, 1].
using Observation = std::array<double, kObservationSize>;

enum class TerminalCause { none, destination, collision, timeout };

std::string_view to_string(TerminalCause cause);
TerminalCause terminal_cause_from_string(std::string_view text);

struct TrafficVehicle {
	VehicleState state;
	bool active = true;
	int stuck_steps = 0;

	bool operator==(const TrafficVehicle&) const;
};

struct WorldState {
	VehicleState ego;
	double previous_action = 0.0;
	std::vector<TrafficVehicle> traffic;
	int step = 0;
	std::mt19937_64 rng;

	bool operator==(const WorldState&) const;
};

/// Nearest traffic vehicle in each detection fan, measured from the ego's front bumper.
struct ZoneHits {
	std::optional<double> d1;
	std::optional<double> d2;
	int vehicle1 = -1;
	int vehicle2 = -1;
};

struct StepResult {
	Observation observation{};
	double reward = 0.0;
	RewardBreakdown components;
	bool terminal = false;
	TerminalCause cause = TerminalCause::none;
	double applied_action = 0.0;
	ZoneHits zones;
};

bool operator==(const VehicleState& a, const VehicleState& b);

/// The static part of the world (configuration plus route network) and the pure
/// functions that advance a WorldState. Holds no mutable state itself.
class Roundabout {
public:
	explicit Roundabout(EnvConfig config);

	const EnvConfig& config() const { return config_; }
	const std::vector<RouteGeometry>& routes() const { return routes_; }
	int ego_route() const { return ego_route_; }
	/// Arc-length window on the ego route that ends the episode successfully.
	double destination_start() const { return destination_start_; }
	double destination_end() const { return destination_start_ + config_.destination_window; }
	/// Traffic actually placed by the last spawn may fall short of n_traffic when space runs out.
	WorldState spawn(std::uint64_t seed) const;

	StepResult step(WorldState& world, double action) const;

	Observation observe(const WorldState& world) const;
	ZoneHits detect_zones(const WorldState& world) const;
	bool check_collision(const WorldState& world) const;
	double traffic_accel(const WorldState& world, std::size_t index) const;
	double safety_shield(double action, const WorldState& world) const;
	double ego_steering(const VehicleState& ego) const;

	/// Perpendicular distance from the ego to its route.
	double cross_track_error(const VehicleState& ego) const;

private:
	void place_on_route(VehicleState& v, int route, double progress) const;
	bool position_free(const WorldState& world, const Vec2& p, double clearance, int skip_traffic) const;
	void respawn(WorldState& world, std::size_t index) const;
	bool predicted_conflict(const VehicleState& self, const VehicleState& other, bool other_has_priority) const;

	EnvConfig config_;
	std::vector<RouteGeometry> routes_;
	std::vector<std::pair<int, int>> route_arms_; // (entry, exit) per route
	int ego_route_ = 0;
	double destination_start_ = 0.0;
};

/// Counter-clockwise loop around the ring centre line.
RouteGeometry ring_route(double radius, double spacing = 0.5);

/// Episode-level wrapper: owns the world and draws a fresh spawn seed per reset.
class RoundaboutEnv {
public:
	explicit RoundaboutEnv(EnvConfig config);

	Observation reset();
	Observation reset(std::uint64_t episode_seed);
	StepResult step(double action);

	const Roundabout& roundabout() const { return roundabout_; }
	const EnvConfig& config() const { return roundabout_.config(); }
	const WorldState& world() const { return world_; }
	std::uint64_t episode_seed() const { return episode_seed_; }

private:
	Roundabout roundabout_;
	WorldState world_;
	std::mt19937_64 seeder_;
	std::uint64_t episode_seed_ = 0;
};

} // namespace sacfd::env
