#include "sacfd/demos/idm_expert.hpp"

#include "sacfd/error.hpp"

#include <algorithm>
#include <cmath>

namespace sacfd::demos {

namespace {
constexpr double kMinGap = 0.1;
}

void IdmConfig::validate() const
{
	if (!(desired_speed > 0 && time_headway > 0 && min_gap > 0 && max_accel > 0 && comfort_decel > 0 && exponent > 0))
	{
		throw ConfigError("IDM parameters must all be positive");
	}
}

double idm_acceleration(const IdmConfig& idm, double speed, std::optional<double> gap, double approach_rate)
{
	const double free_term = std::pow(speed / idm.desired_speed, idm.exponent);
	double interaction = 0.0;
	if (gap)
	{
		const double dynamic =
			speed * idm.time_headway + speed * approach_rate / (2.0 * std::sqrt(idm.max_accel * idm.comfort_decel));
		const double desired_gap = idm.min_gap + std::max(dynamic, 0.0);
		const double ratio = desired_gap / std::max(*gap, kMinGap);
		interaction = ratio * ratio;
	}
	return idm.max_accel * (1.0 - free_term - interaction);
}

double normalize_accel(double accel, const env::EnvConfig& config)
{
	const double a = accel >= 0.0 ? accel / config.a_max : accel / config.b_max;
	return std::clamp(a, -1.0, 1.0);
}

double scripted_expert_action(const env::Roundabout& world_model, const env::WorldState& world, const IdmConfig& idm)
{
	const auto& config = world_model.config();
	const auto hits = world_model.detect_zones(world);
	std::optional<double> gap;
	double approach = 0.0;
	if (hits.vehicle2 >= 0)
	{
		const auto& leader = world.traffic[static_cast<std::size_t>(hits.vehicle2)].state;
		gap = *hits.d2 - 0.5 * leader.length;
		approach = world.ego.speed - leader.speed * std::cos(leader.heading - world.ego.heading);
	}
	return normalize_accel(idm_acceleration(idm, world.ego.speed, gap, approach), config);
}

} // namespace sacfd::demos
