#include "sacfd/env/reward.hpp"

namespace sacfd::env {

double safe_speed(double speed, double action, double v_min)
{
	const bool waiting = speed <= v_min && action < 0.0;
	return speed * (1.0 - (waiting ? 1.0 : 0.0));
}

double speed_reward(double speed, double v_max)
{
	return speed + 2.0 * (v_max - speed) * (speed >= v_max ? 1.0 : 0.0);
}

double safety_reward(const RewardInputs& in, const EnvConfig& config)
{
	double hazard = 0.0;
	if (in.d1)
	{
		hazard += config.lambda_s * (config.zone1.radius - *in.d1) / config.zone1.radius;
	}
	if (in.d2)
	{
		hazard += (1.0 - config.lambda_s) * (config.zone2.radius - *in.d2) / config.zone2.radius;
	}
	return -hazard * safe_speed(in.speed, in.action, config.v_min);
}

RewardBreakdown compute_reward(const RewardInputs& in, const EnvConfig& config)
{
	RewardBreakdown r;
	r.r_v = speed_reward(in.speed, config.v_max);
	r.r_step = config.step_penalty;
	r.r_col = in.collision ? config.collision_penalty : 0.0;
	r.r_safe = safety_reward(in, config);
	r.total = r.r_v + r.r_step + r.r_col + r.r_safe;
	return r;
}

} // namespace sacfd::env
