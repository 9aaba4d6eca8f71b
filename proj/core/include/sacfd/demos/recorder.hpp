#pragma once

#include "sacfd/demos/idm_expert.hpp"
#include "sacfd/demos/trajectory_file.hpp"
#include "sacfd/env/roundabout.hpp"
#include "sacfd/numerics/mlp.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace sacfd::demos {

/// Maps the current world (and its observation) to a normalized longitudinal command.
using Controller = std::function<double(const env::Roundabout&, const env::WorldState&, const env::Observation&)>;

Controller scripted_controller(IdmConfig idm = {});
/// tanh(mu(s)) of a policy network.
Controller policy_controller(numerics::Mlp policy);

struct EpisodeOutcome {
	TrajectoryFile trajectory;
	env::TerminalCause cause = env::TerminalCause::none;
	std::vector<env::WorldState> worlds; // post-reset world plus one per step, when requested
};

/// Resets `env` with `seed` and runs the controller until a terminal step.
EpisodeOutcome run_episode(env::RoundaboutEnv& env, std::uint64_t seed, const Controller& controller, DemoSource source,
	bool keep_worlds = false);

/// run_episode followed by an atomic write; returns the episodic reward. No file is left
/// behind when writing fails.
double record_episode(env::RoundaboutEnv& env, std::uint64_t seed, const Controller& controller, DemoSource source,
	const std::filesystem::path& out);

/// Re-simulates the header seed with the recorded actions and reports whether every state,
/// reward and terminal flag is reproduced exactly.
bool replay_matches(const env::EnvConfig& config, const TrajectoryFile& trajectory);

/// Builds a TrajectoryFile from already-collected transitions.
TrajectoryFile make_trajectory(const env::EnvConfig& config, std::uint64_t seed, DemoSource source,
	std::vector<replay::Transition> transitions, env::TerminalCause cause);

} // namespace sacfd::demos
