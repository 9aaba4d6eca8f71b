#include "sacfd/replay/mixing.hpp"

#include "sacfd/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace sacfd::replay {

long round_half_even(double x)
{
	const double fl = std::floor(x);
	const double frac = x - fl;
	long base = static_cast<long>(fl);
	if (frac > 0.5)
	{
		return base + 1;
	}
	if (frac < 0.5)
	{
		return base;
	}
	return (base % 2 == 0) ? base : base + 1;
}

std::size_t agent_slots(const RatioState& ratio)
{
	const long slots = round_half_even(std::clamp(ratio.rho, 0.0, 1.0) * ratio.batch_size);
	return static_cast<std::size_t>(std::clamp<long>(slots, 0, ratio.batch_size));
}

MixedBatch compose_minibatch(const RatioState& ratio, const PrioritizedBuffer& agent, const PrioritizedBuffer& expert,
	std::mt19937_64& rng)
{
	if (ratio.batch_size <= 0)
	{
		throw ContractError("mini-batch size must be positive");
	}
	const std::size_t total = static_cast<std::size_t>(ratio.batch_size);
	std::size_t want_agent = agent_slots(ratio);
	MixedBatch mixed;
	if (want_agent > agent.size())
	{
		if (expert.empty())
		{
			throw ContractError("agent buffer holds fewer items than the agent share and there is no expert buffer to fill from");
		}
		mixed.shortfall = want_agent - agent.size();
		spdlog::debug("compose_minibatch: agent buffer has {} items, {} slots moved to expert side", agent.size(), mixed.shortfall);
		want_agent = agent.size();
	}
	const std::size_t want_expert = total - want_agent;
	if (want_expert > 0 && expert.empty())
	{
		throw ContractError("expert share requested from an empty expert buffer");
	}
	if (want_agent > 0)
	{
		mixed.batch.append(agent.sample(want_agent, rng));
	}
	if (want_expert > 0)
	{
		mixed.batch.append(expert.sample(want_expert, rng));
	}
	mixed.agent_count = want_agent;
	mixed.expert_count = want_expert;
	return mixed;
}

double update_ratio(const RatioState& ratio, double agent_episode_reward)
{
	const double step = agent_episode_reward >= ratio.expert_mean_reward ? 1.0 / ratio.batch_size : 0.0;
	return std::clamp(ratio.rho + step, 0.0, 1.0);
}

} // namespace sacfd::replay
