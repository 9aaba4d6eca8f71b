#pragma once

#include "sacfd/demos/demo_set.hpp"
#include "sacfd/learner/learner.hpp"

#include <cstdint>
#include <vector>

namespace sacfd::demos {

struct BcConfig {
	int epochs = 30;
	int batch_size = 64;
	double learning_rate = 3e-4;
	/// Share of episodes held out for validation (at least one when the set has two or more).
	double holdout_fraction = 0.1;
	std::vector<int> hidden{64, 64};
	double output_scale = 1e-2;
	std::uint64_t seed = 0;
};

struct BcEpoch {
	int epoch = 0;
	double train_loss = 0.0;  // mean mini-batch loss over the epoch
	double holdout_mse = 0.0; // NaN when nothing is held out
};

struct BcResult {
	numerics::Mlp policy; // same layout as the actor: outputs [mean, log_std]
	std::vector<BcEpoch> history;
};

/// mean_b (tanh(mu(s_b)) - a_b)^2 and its gradient with respect to the policy.
learner::LossAndGrad bc_loss(const numerics::Mlp& policy, const numerics::Matrix& states, const numerics::Vector& actions);

BcResult bc_train(const std::vector<replay::Transition>& train, const std::vector<replay::Transition>& holdout,
	const BcConfig& config);
BcResult bc_train(const DemoSet& set, const BcConfig& config);

} // namespace sacfd::demos
