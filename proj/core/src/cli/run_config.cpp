#include "sacfd/cli/run_config.hpp"

#include "sacfd/env/roundabout.hpp"
#include "sacfd/error.hpp"

#include <fmt/format.h>

namespace sacfd::cli {

void RunConfig::validate() const
{
	env.validate();
	if (total_steps < 0)
	{
		throw ConfigError("--steps must be >= 0");
	}
	if (seeds.empty())
	{
		throw ConfigError("at least one seed is required");
	}
	if (agent_capacity == 0)
	{
		throw ConfigError("agent buffer capacity must be positive");
	}
	if (eval_interval <= 0 || eval_episodes <= 0 || metrics_interval <= 0)
	{
		throw ConfigError("evaluation and metrics intervals must be positive");
	}
	if (learner.batch_size <= 0 || learner.warmup_steps < 0)
	{
		throw ConfigError("batch size must be positive and warmup non-negative");
	}
	if (bc && !demos)
	{
		throw ConfigError("--bc needs demonstrations; drop --no-demos");
	}
}

std::string RunConfig::variant() const
{
	if (bc)
	{
		return "bc";
	}
	return demos ? "sacfd" : "sac";
}

std::filesystem::path RunConfig::run_dir(std::uint64_t seed) const
{
	return out_dir / fmt::format("{}{}-seed{}", variant(), shield ? "-shield" : "", seed);
}

std::string code_version()
{
#ifdef SACFD_VERSION
	return SACFD_VERSION;
#else
	return "unknown";
#endif
}

nlohmann::json run_metadata(const RunConfig& config, std::uint64_t seed, const std::vector<std::string>& demo_hashes,
	std::optional<double> expert_mean_reward)
{
	auto env_config = config.env;
	env_config.seed = seed;
	env_config.shield = config.shield;
	nlohmann::json j{
		{"code_version", code_version()},
		{"variant", config.variant()},
		{"seed", seed},
		{"env_config_hash", env::config_hash(env_config)},
		{"observation_version", env::kObservationVersion},
		{"env_config", env::to_text(env_config)},
		{"demos", config.demos},
		{"shield", config.shield},
		{"total_steps", config.total_steps},
		{"demo_dir", config.demo_dir.string()},
		{"demo_hashes", demo_hashes},
		{"agent_capacity", config.agent_capacity},
		{"eval_interval", config.eval_interval},
		{"eval_episodes", config.eval_episodes},
		{"eval_seed", config.eval_seed},
		{"metrics_interval", config.metrics_interval},
		{"bc_epochs", config.bc_epochs},
		{"learner",
			{{"hidden", config.learner.hidden}, {"gamma", config.learner.gamma}, {"polyak", config.learner.polyak},
				{"initial_alpha", config.learner.initial_alpha}, {"target_entropy", config.learner.target_entropy},
				{"learning_rate", config.learner.learning_rate}, {"batch_size", config.learner.batch_size},
				{"warmup_steps", config.learner.warmup_steps},
				{"share_policy_sample", config.learner.share_policy_sample}, {"q_filter", config.learner.q_filter}}},
		{"per", {{"omega", config.per.omega}, {"beta", config.per.beta}, {"eps", config.per.eps}}},
	};
	if (config.min_demo_reward)
	{
		j["min_demo_reward"] = *config.min_demo_reward;
	}
	if (expert_mean_reward)
	{
		j["expert_mean_reward"] = *expert_mean_reward;
	}
	return j;
}

} // namespace sacfd::cli
