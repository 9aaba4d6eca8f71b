#pragma once

#include "sacfd/env/config.hpp"

#include <optional>

namespace sacfd::env {

struct RewardInputs {
	double speed = 0.0;
	double action = 0.0;
	std::optional<double> d1;
	std::optional<double> d2;
	bool collision = false;
};

struct RewardBreakdown {
	double r_v = 0.0;
	double r_step = 0.0;
	double r_col = 0.0;
	double r_safe = 0.0;
	double total = 0.0; // ((r_v + r_step) + r_col) + r_safe
};

/// Speed regulator: v, or 0 when the ego is (nearly) stopped and braking.
double safe_speed(double speed, double action, double v_min);

/// Efficiency term: v below the limit, 2 v_max - v above it.
double speed_reward(double speed, double v_max);

double safety_reward(const RewardInputs& in, const EnvConfig& config);

RewardBreakdown compute_reward(const RewardInputs& in, const EnvConfig& config);

} // namespace sacfd::env
