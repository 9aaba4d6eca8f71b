#include "sacfd/learner/checkpoint.hpp"

#include "sacfd/error.hpp"
#include "sacfd/numerics/checkpoint.hpp"

#include <fmt/format.h>

namespace sacfd::learner {

namespace {

constexpr const char* kFormat = "sacfd-learner";

nlohmann::json scalar_adam_json(const numerics::ScalarAdamState& s)
{
	return {{"m", s.first_moment}, {"v", s.second_moment}, {"step", s.step}, {"lr", s.hyper.learning_rate},
		{"beta1", s.hyper.beta1}, {"beta2", s.hyper.beta2}, {"eps", s.hyper.eps}};
}

numerics::ScalarAdamState scalar_adam_from(const nlohmann::json& j)
{
	numerics::ScalarAdamState s;
	s.first_moment = j.at("m").get<double>();
	s.second_moment = j.at("v").get<double>();
	s.step = j.at("step").get<std::int64_t>();
	s.hyper = {j.at("lr").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(), j.at("eps").get<double>()};
	return s;
}

} // namespace

nlohmann::json to_json(const LearnerCheckpoint& c)
{
	using numerics::to_json;
	const auto& s = c.state;
	return {
		{"format", kFormat},
		{"version", numerics::kCheckpointVersion},
		{"config_hash", c.config_hash},
		{"observation_version", c.observation_version},
		{"env_steps", c.env_steps},
		{"episodes", c.episodes},
		{"updates", s.updates},
		{"rho", c.ratio.rho},
		{"batch_size", c.ratio.batch_size},
		{"expert_mean_reward", c.ratio.expert_mean_reward},
		{"log_alpha", s.log_alpha},
		{"alpha_opt", scalar_adam_json(s.alpha_opt)},
		{"networks",
			{{"policy", to_json(s.policy)}, {"q1", to_json(s.q1)}, {"q2", to_json(s.q2)}, {"value", to_json(s.value)},
				{"value_target", to_json(s.value_target)}}},
		{"optimizers",
			{{"policy", to_json(s.policy_opt)}, {"q1", to_json(s.q1_opt)}, {"q2", to_json(s.q2_opt)},
				{"value", to_json(s.value_opt)}}},
	};
}

LearnerCheckpoint checkpoint_from_json(const nlohmann::json& j)
{
	try
	{
		if (j.at("format").get<std::string>() != kFormat)
		{
			throw ConfigError("not a learner checkpoint");
		}
		const int version = j.at("version").get<int>();
		if (version != numerics::kCheckpointVersion)
		{
			throw ConfigError(fmt::format("unsupported checkpoint version {}", version));
		}
		LearnerCheckpoint c;
		c.config_hash = j.at("config_hash").get<std::string>();
		c.observation_version = j.at("observation_version").get<int>();
		c.env_steps = j.at("env_steps").get<std::int64_t>();
		c.episodes = j.at("episodes").get<std::int64_t>();
		c.ratio.rho = j.at("rho").get<double>();
		c.ratio.batch_size = j.at("batch_size").get<int>();
		c.ratio.expert_mean_reward = j.at("expert_mean_reward").get<double>();
		auto& s = c.state;
		s.updates = j.at("updates").get<std::int64_t>();
		s.log_alpha = j.at("log_alpha").get<double>();
		s.alpha_opt = scalar_adam_from(j.at("alpha_opt"));
		const auto& nets = j.at("networks");
		s.policy = numerics::mlp_from_json(nets.at("policy"));
		s.q1 = numerics::mlp_from_json(nets.at("q1"));
		s.q2 = numerics::mlp_from_json(nets.at("q2"));
		s.value = numerics::mlp_from_json(nets.at("value"));
		s.value_target = numerics::mlp_from_json(nets.at("value_target"));
		const auto& opts = j.at("optimizers");
		s.policy_opt = numerics::adam_state_from_json(opts.at("policy"));
		s.q1_opt = numerics::adam_state_from_json(opts.at("q1"));
		s.q2_opt = numerics::adam_state_from_json(opts.at("q2"));
		s.value_opt = numerics::adam_state_from_json(opts.at("value"));
		return c;
	}
	catch (const nlohmann::json::exception& e)
	{
		throw ConfigError(fmt::format("malformed learner checkpoint: {}", e.what()));
	}
}

void save_checkpoint(const std::filesystem::path& path, const LearnerCheckpoint& checkpoint)
{
	numerics::write_text_atomically(path, to_json(checkpoint).dump());
}

LearnerCheckpoint load_checkpoint(const std::filesystem::path& path)
{
	try
	{
		return checkpoint_from_json(nlohmann::json::parse(numerics::read_text(path)));
	}
	catch (const nlohmann::json::parse_error& e)
	{
		throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
	}
}

Mlp load_policy(const std::filesystem::path& path)
{
	nlohmann::json j;
	try
	{
		j = nlohmann::json::parse(numerics::read_text(path));
	}
	catch (const nlohmann::json::parse_error& e)
	{
		throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
	}
	if (j.value("format", "") == kFormat)
	{
		return checkpoint_from_json(j).state.policy;
	}
	return numerics::load_parameters(path);
}

} // namespace sacfd::learner
