#pragma once

#include "sacfd/replay/prioritized_buffer.hpp"

#include <random>

namespace sacfd::replay {

/// Share of each mini-batch drawn from the agent's own experience.
struct RatioState {
	double rho = 0.3;
	int batch_size = 64;
	double expert_mean_reward = 0.0;
};

struct MixedBatch {
	SampleBatch batch;
	std::size_t agent_count = 0;
	std::size_t expert_count = 0;
	std::size_t shortfall = 0; // agent slots that had to be filled from the expert side
};

/// round(x) with ties to even.
long round_half_even(double x);

/// Agent slots = round_half_even(rho * N_B); the remainder comes from the expert buffer.
std::size_t agent_slots(const RatioState& ratio);

/// Agent items first, then expert items; each side is drawn with its own priorities and
/// its IS weights normalized by that side's maximum.
MixedBatch compose_minibatch(const RatioState& ratio, const PrioritizedBuffer& agent, const PrioritizedBuffer& expert,
	std::mt19937_64& rng);

/// rho <- clip(rho + 1 / N_B * [episode_reward >= expert mean], 0, 1)
double update_ratio(const RatioState& ratio, double agent_episode_reward);

} // namespace sacfd::replay
