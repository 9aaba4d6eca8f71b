#pragma once

#include "sacfd/env/roundabout.hpp"

#include <optional>

namespace sacfd::demos {

/// Intelligent Driver Model parameters for the scripted demonstrator.
struct IdmConfig {
	double desired_speed = 11.0; // v0, m/s
	double time_headway = 1.2;   // T, s
	double min_gap = 2.5;        // s0, m
	double max_accel = 3.0;      // a, m/s^2
	double comfort_decel = 3.0;  // b, m/s^2
	double exponent = 4.0;       // delta

	void validate() const;
};

/// IDM acceleration. `gap` is the bumper-to-bumper distance to the leader (absent on a
/// free road); `approach_rate` is ego speed minus leader speed along the ego heading.
double idm_acceleration(const IdmConfig& idm, double speed, std::optional<double> gap, double approach_rate);

/// Maps an acceleration onto the normalized command: / a_max when positive, / b_max when
/// negative, clamped to [-1, 1].
double normalize_accel(double accel, const env::EnvConfig& config);

/// IDM on the zone-2 leader, expressed as a normalized action.
double scripted_expert_action(const env::Roundabout& world_model, const env::WorldState& world, const IdmConfig& idm = {});

} // namespace sacfd::demos
