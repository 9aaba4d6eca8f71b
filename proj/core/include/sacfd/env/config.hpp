#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace sacfd::env {

struct ZoneSpec {
	double angle_deg = 0.0; // half-angle of the fan either side of the heading
	double radius = 0.0;
};

/// Every tunable of the roundabout world. Defaults carry the experiment's parameter table.
struct EnvConfig {
	// world layout
	double ring_radius = 26.0;
	double arm_length = 45.0;
	double lane_offset = 2.0;
	int n_traffic = 20;
	int ego_entry_arm = 3; // arms are numbered counter-clockwise from +x: 0 east, 1 north, 2 west, 3 south
	int ego_exit_arm = 1;
	double destination_offset = 15.0; // metres past the end of the exit curve
	double destination_window = 5.0;
	double spawn_jitter = 3.0;
	double spawn_position = 6.0; // nominal ego start, arc length along its route

	// vehicles
	double vehicle_length = 4.5;
	double vehicle_width = 1.9;
	double wheelbase = 2.85;
	double a_max = 3.0;
	double b_max = 6.0;
	double max_steer_deg = 35.0;
	double lookahead_gain = 1.0;
	double lookahead_min = 4.0;
	double lookahead_max = 12.0;

	// traffic
	double traffic_speed = 8.0;
	double traffic_gain = 1.0;
	double traffic_sector_radius = 5.0;
	double traffic_sector_angle_deg = 30.0;
	int traffic_stuck_steps = 100;
	// constant-velocity look-ahead for conflicts outside the forward sector; 0 disables
	double traffic_predict_horizon = 2.0;
	double traffic_predict_margin = 0.5;

	// reward
	double v_max = 12.0;
	double v_min = 0.1;
	ZoneSpec zone1{60.0, 10.0};
	ZoneSpec zone2{30.0, 20.0};
	double lambda_s = 0.8;
	double step_penalty = -0.1;
	double collision_penalty = -10.0;

	// timing
	double dt = 0.1;
	int max_steps = 800;

	// evaluation-time safety controller
	bool shield = false;
	double d_brake = 6.0;

	std::uint64_t seed = 0;

	/// Throws ConfigError when a field is out of range.
	void validate() const;
};

EnvConfig parse_env_config(const std::string& text);
EnvConfig load_env_config(const std::filesystem::path& path);

/// Canonical key = value text; parse_env_config(to_text(c)) reproduces c exactly.
std::string to_text(const EnvConfig& config);

/// FNV-1a over the canonical text of everything that shapes dynamics, observations and reward.
/// Seed and shield settings are excluded so demos and checkpoints stay comparable across them.
std::string config_hash(const EnvConfig& config);

} // namespace sacfd::env
