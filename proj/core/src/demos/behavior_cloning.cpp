#include "sacfd/demos/behavior_cloning.hpp"

#include "sacfd/error.hpp"
#include "sacfd/numerics/adam.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace sacfd::demos {

namespace {

using numerics::Matrix;
using numerics::Vector;

void to_tensors(const std::vector<replay::Transition>& ts, const std::vector<std::size_t>& order, std::size_t begin,
	std::size_t end, Matrix& states, Vector& actions)
{
	const auto n = static_cast<Eigen::Index>(end - begin);
	states.resize(env::kObservationSize, n);
	actions.resize(n);
	for (Eigen::Index b = 0; b < n; ++b)
	{
		const auto& tr = ts[order[begin + static_cast<std::size_t>(b)]];
		for (std::size_t k = 0; k < env::kObservationSize; ++k)
		{
			states(static_cast<Eigen::Index>(k), b) = tr.state[k];
		}
		actions[b] = tr.action;
	}
}

double mse(const numerics::Mlp& policy, const std::vector<replay::Transition>& ts)
{
	if (ts.empty())
	{
		return std::numeric_limits<double>::quiet_NaN();
	}
	std::vector<std::size_t> order(ts.size());
	std::iota(order.begin(), order.end(), 0);
	Matrix states;
	Vector actions;
	to_tensors(ts, order, 0, ts.size(), states, actions);
	return bc_loss(policy, states, actions).loss;
}

} // namespace

learner::LossAndGrad bc_loss(const numerics::Mlp& policy, const Matrix& states, const Vector& actions)
{
	const Eigen::Index n = states.cols();
	if (n == 0 || actions.size() != n)
	{
		throw ContractError("behavior cloning loss: batch sizes disagree");
	}
	numerics::ForwardCache cache;
	const Matrix out = numerics::forward(policy, states, &cache);
	learner::LossAndGrad result;
	result.per_sample.resize(n);
	Matrix upstream = Matrix::Zero(out.rows(), n);
	for (Eigen::Index b = 0; b < n; ++b)
	{
		const double t = std::tanh(out(0, b));
		const double diff = t - actions[b];
		result.per_sample[b] = diff * diff;
		upstream(0, b) = 2.0 * diff * (1.0 - t * t) / static_cast<double>(n);
	}
	result.loss = result.per_sample.mean();
	result.grad = numerics::backward(policy, cache, upstream).parameter_grad;
	return result;
}

BcResult bc_train(const std::vector<replay::Transition>& train, const std::vector<replay::Transition>& holdout,
	const BcConfig& config)
{
	if (train.empty())
	{
		throw ContractError("behavior cloning needs at least one transition");
	}
	if (config.epochs < 0 || config.batch_size <= 0)
	{
		throw ConfigError("behavior cloning: epochs must be >= 0 and batch size positive");
	}
	std::mt19937_64 rng(config.seed);
	std::vector<int> sizes{static_cast<int>(env::kObservationSize)};
	sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
	sizes.push_back(2);
	BcResult result;
	result.policy = numerics::Mlp::initialized(sizes, rng, config.output_scale);
	auto opt = numerics::AdamState::zeros_like(result.policy, numerics::AdamHyper{config.learning_rate});

	std::vector<std::size_t> order(train.size());
	std::iota(order.begin(), order.end(), 0);
	const auto batch = static_cast<std::size_t>(config.batch_size);
	Matrix states;
	Vector actions;
	for (int epoch = 1; epoch <= config.epochs; ++epoch)
	{
		std::shuffle(order.begin(), order.end(), rng);
		double loss_sum = 0.0;
		std::size_t batches = 0;
		for (std::size_t begin = 0; begin < order.size(); begin += batch)
		{
			const std::size_t end = std::min(order.size(), begin + batch);
			to_tensors(train, order, begin, end, states, actions);
			const auto lg = bc_loss(result.policy, states, actions);
			numerics::adam_step_in_place(result.policy, lg.grad, opt);
			loss_sum += lg.loss;
			++batches;
		}
		BcEpoch e{epoch, loss_sum / static_cast<double>(batches), mse(result.policy, holdout)};
		spdlog::debug("bc epoch {}: train {:.6f} holdout {:.6f}", epoch, e.train_loss, e.holdout_mse);
		result.history.push_back(e);
	}
	return result;
}

BcResult bc_train(const DemoSet& set, const BcConfig& config)
{
	if (set.episodes.empty())
	{
		throw ContractError("behavior cloning needs a nonempty demo set");
	}
	const std::size_t episodes = set.episodes.size();
	std::size_t held = 0;
	if (episodes >= 2)
	{
		held = std::clamp<std::size_t>(
			static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(episodes))), 1, episodes - 1);
	}
	std::vector<replay::Transition> train;
	std::vector<replay::Transition> holdout;
	for (std::size_t e = 0; e < episodes; ++e)
	{
		auto& dst = e + held >= episodes ? holdout : train;
		const auto& ts = set.episodes[e].transitions;
		dst.insert(dst.end(), ts.begin(), ts.end());
	}
	return bc_train(train, holdout, config);
}

} // namespace sacfd::demos
