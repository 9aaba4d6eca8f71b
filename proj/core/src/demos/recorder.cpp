#include "sacfd/demos/recorder.hpp"

#include "sacfd/learner/learner.hpp"

#include <cstdio>

namespace sacfd::demos {

Controller scripted_controller(IdmConfig idm)
{
	idm.validate();
	return [idm](const env::Roundabout& r, const env::WorldState& w, const env::Observation&) {
		return scripted_expert_action(r, w, idm);
	};
}

Controller policy_controller(numerics::Mlp policy)
{
	return [policy = std::move(policy)](const env::Roundabout&, const env::WorldState&, const env::Observation& obs) {
		return learner::greedy_action(policy, Eigen::Map<const numerics::Vector>(obs.data(), static_cast<Eigen::Index>(obs.size())));
	};
}

TrajectoryFile make_trajectory(const env::EnvConfig& config, std::uint64_t seed, DemoSource source,
	std::vector<replay::Transition> transitions, env::TerminalCause cause)
{
	TrajectoryFile file;
	file.header.config_hash = env::config_hash(config);
	file.header.observation_version = env::kObservationVersion;
	file.header.dt = config.dt;
	file.header.seed = seed;
	file.header.source = source;
	file.header.cause = std::string(env::to_string(cause));
	file.transitions = std::move(transitions);
	file.header.episodic_reward = reward_sum(file.transitions);
	return file;
}

EpisodeOutcome run_episode(env::RoundaboutEnv& environment, std::uint64_t seed, const Controller& controller,
	DemoSource source, bool keep_worlds)
{
	EpisodeOutcome outcome;
	env::Observation obs = environment.reset(seed);
	if (keep_worlds)
	{
		outcome.worlds.push_back(environment.world());
	}
	std::vector<replay::Transition> transitions;
	while (true)
	{
		const double action = controller(environment.roundabout(), environment.world(), obs);
		const auto result = environment.step(action);
		replay::Transition tr;
		tr.state = obs;
		tr.action = result.applied_action;
		tr.reward = result.reward;
		tr.next_state = result.observation;
		tr.done = result.terminal && result.cause != env::TerminalCause::timeout;
		tr.source = replay::Source::expert;
		transitions.push_back(tr);
		if (keep_worlds)
		{
			outcome.worlds.push_back(environment.world());
		}
		obs = result.observation;
		if (result.terminal)
		{
			outcome.cause = result.cause;
			break;
		}
	}
	outcome.trajectory = make_trajectory(environment.config(), seed, source, std::move(transitions), outcome.cause);
	return outcome;
}

double record_episode(env::RoundaboutEnv& environment, std::uint64_t seed, const Controller& controller,
	DemoSource source, const std::filesystem::path& out)
{
	const auto outcome = run_episode(environment, seed, controller, source);
	try
	{
		write_trajectory(out, outcome.trajectory);
	}
	catch (...)
	{
		std::error_code ec;
		std::filesystem::remove(out, ec);
		throw;
	}
	return outcome.trajectory.header.episodic_reward;
}

bool replay_matches(const env::EnvConfig& config, const TrajectoryFile& trajectory)
{
	env::RoundaboutEnv environment(config);
	env::Observation obs = environment.reset(trajectory.header.seed);
	const auto& ts = trajectory.transitions;
	for (std::size_t t = 0; t < ts.size(); ++t)
	{
		if (obs != ts[t].state)
		{
			return false;
		}
		const auto result = environment.step(ts[t].action);
		const bool done = result.terminal && result.cause != env::TerminalCause::timeout;
		if (result.observation != ts[t].next_state || result.reward != ts[t].reward || done != ts[t].done)
		{
			return false;
		}
		if (result.terminal != (t + 1 == ts.size()))
		{
			return false;
		}
		obs = result.observation;
	}
	return true;
}

} // namespace sacfd::demos
