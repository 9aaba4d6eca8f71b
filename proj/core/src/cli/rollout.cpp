#include "sacfd/cli/rollout.hpp"

#include "sacfd/error.hpp"

#include <cmath>

namespace sacfd::cli {

namespace {

double sample_sd(double sum, double sum_sq, int n)
{
	if (n < 2)
	{
		return 0.0;
	}
	const double mean = sum / n;
	return std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)));
}

} // namespace

EvalReport evaluate(const env::EnvConfig& config, const demos::Controller& controller, int episodes, std::uint64_t seed)
{
	if (episodes <= 0)
	{
		throw ConfigError("evaluation needs at least one episode");
	}
	env::RoundaboutEnv environment(config);
	int success = 0;
	int collision = 0;
	int timeout = 0;
	double r_sum = 0.0;
	double r_sq = 0.0;
	double l_sum = 0.0;
	double l_sq = 0.0;
	for (int e = 0; e < episodes; ++e)
	{
		env::Observation obs = environment.reset(seed + static_cast<std::uint64_t>(e));
		double reward = 0.0;
		int steps = 0;
		env::TerminalCause cause = env::TerminalCause::none;
		while (cause == env::TerminalCause::none)
		{
			const auto result = environment.step(controller(environment.roundabout(), environment.world(), obs));
			reward += result.reward;
			++steps;
			obs = result.observation;
			cause = result.cause;
		}
		success += cause == env::TerminalCause::destination;
		collision += cause == env::TerminalCause::collision;
		timeout += cause == env::TerminalCause::timeout;
		const double length = steps * config.dt;
		r_sum += reward;
		r_sq += reward * reward;
		l_sum += length;
		l_sq += length * length;
	}
	EvalReport r;
	r.episodes = episodes;
	r.success_rate = static_cast<double>(success) / episodes;
	r.collision_rate = static_cast<double>(collision) / episodes;
	r.timeout_rate = static_cast<double>(timeout) / episodes;
	r.mean_reward = r_sum / episodes;
	r.sd_reward = sample_sd(r_sum, r_sq, episodes);
	r.mean_length_s = l_sum / episodes;
	r.sd_length_s = sample_sd(l_sum, l_sq, episodes);
	return r;
}

nlohmann::json to_json(const EvalReport& r)
{
	return {{"episodes", r.episodes}, {"success_rate", r.success_rate}, {"collision_rate", r.collision_rate},
		{"timeout_rate", r.timeout_rate}, {"mean_reward", r.mean_reward}, {"sd_reward", r.sd_reward},
		{"mean_length_s", r.mean_length_s}, {"sd_length_s", r.sd_length_s}};
}

} // namespace sacfd::cli
