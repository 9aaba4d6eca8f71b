#pragma once

#include "sacfd/numerics/adam.hpp"
#include "sacfd/numerics/mlp.hpp"
#include "sacfd/replay/mixing.hpp"
#include "sacfd/replay/prioritized_buffer.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace sacfd::learner {

using numerics::Matrix;
using numerics::Mlp;
using numerics::Vector;

struct LearnerConfig {
	int observation_size = 7;
	std::vector<int> hidden{64, 64};
	double gamma = 0.995;
	double polyak = 0.005;
	double initial_alpha = 1.0;
	double target_entropy = -1.0;
	double learning_rate = 3e-4;
	int batch_size = 64;
	int warmup_steps = 1000;
	double policy_output_scale = 1e-2;
	/// Reuse the value-target action sample in the policy loss and Q-filter.
	bool share_policy_sample = true;
	bool q_filter = true;
};

/// All trainable state of the actor-critic learner.
struct LearnerState {
	Mlp policy; // outputs [mean, log_std]
	Mlp q1;
	Mlp q2;
	Mlp value;
	Mlp value_target;
	numerics::AdamState policy_opt;
	numerics::AdamState q1_opt;
	numerics::AdamState q2_opt;
	numerics::AdamState value_opt;
	double log_alpha = 0.0;
	numerics::ScalarAdamState alpha_opt;
	std::int64_t updates = 0;

	static LearnerState initialize(const LearnerConfig& config, std::mt19937_64& rng);
	double alpha() const;
};

struct LossReport {
	bool warming_up = false;
	double q_loss1 = 0.0;
	double q_loss2 = 0.0;
	double value_loss = 0.0;
	double rl_policy_loss = 0.0;
	double il_policy_loss = 0.0;
	double alpha_loss = 0.0;
	double filter_pass_fraction = 1.0; // 1.0 when the batch held no expert samples
	double alpha = 0.0;
	double rho = 0.0;
	std::size_t agent_samples = 0;
	std::size_t expert_samples = 0;
	std::size_t expert_passed = 0;
	int skipped_updates = 0;
	int floored_priorities = 0;

	bool operator==(const LossReport&) const = default;
};

/// Column-per-sample view of a replay batch.
struct BatchTensors {
	Matrix states;
	Matrix next_states;
	Vector actions;
	Vector rewards;
	Vector not_done;
	Vector weights;
	std::vector<replay::Source> sources;

	static BatchTensors from(const replay::SampleBatch& batch);
	Eigen::Index size() const { return actions.size(); }
};

/// Rows = state features followed by the action.
Matrix state_action(const Matrix& states, const Vector& actions);

/// Reparameterized tanh-Gaussian evaluation of the policy over a batch (1-D actions).
struct PolicyBatch {
	numerics::ForwardCache cache;
	Vector mean;
	Vector log_std;
	Vector log_std_pass;
	Vector action;
	Vector log_prob;
};

PolicyBatch evaluate_policy(const Mlp& policy, const Matrix& states, const Vector& noise);

struct LossAndGrad {
	double loss = 0.0;
	Vector per_sample; // unweighted per-sample loss terms
	Mlp grad;
};

/// y = r + gamma * not_done * V_target(s')
Vector q_target(const Mlp& value_target, const BatchTensors& batch, double gamma);

/// mean_b w_b (Q(s_b, a_b) - y_b)^2
LossAndGrad critic_loss(const Mlp& q, const Matrix& state_actions, const Vector& targets, const Vector& weights);

/// y_V = min(Q1, Q2)(s, a~) - alpha log pi(a~|s)
Vector value_targets(const Mlp& q1, const Mlp& q2, const Matrix& states, const Vector& sampled_actions,
	const Vector& log_probs, double alpha);

/// mean_b w_b (V(s_b) - y_b)^2
LossAndGrad value_loss(const Mlp& value, const Matrix& states, const Vector& targets, const Vector& weights);

/// Passes when either critic rates the expert action at least as highly as the smaller
/// critic rates the policy's sampled action.
bool q_filter(double q1_expert, double q2_expert, double min_q_sampled);

/// Filter decision per sample; agent-sourced samples are always false.
std::vector<bool> q_filter_mask(const Mlp& q1, const Mlp& q2, const BatchTensors& batch, const Vector& sampled_actions);

/// Per sample: alpha log pi - min Q for agent samples, mask * (tanh(mu) - a_E)^2 for expert
/// samples; total = mean_b w_b term_b, differentiated with respect to the policy.
LossAndGrad policy_loss(const Mlp& policy, const Mlp& q1, const Mlp& q2, const BatchTensors& batch, const Vector& noise,
	const std::vector<bool>& imitation_mask, double alpha);

struct TemperatureLoss {
	double loss = 0.0;
	double grad_log_alpha = 0.0;
};

/// J = mean(-alpha (log pi + H_target)), differentiated with respect to log alpha.
TemperatureLoss temperature_loss(double log_alpha, const Vector& log_probs, double target_entropy);

/// target <- weight * source + (1 - weight) * target
void polyak_update(Mlp& target, const Mlp& source, double weight);

/// One full gradient update: sample, critics, value, Polyak, policy, temperature, priorities.
/// Returns a warming-up report without touching anything while the agent buffer holds
/// fewer than warmup_steps items. `expert` may be null when demonstrations are disabled.
LossReport train_step(LearnerState& state, const LearnerConfig& config, replay::PrioritizedBuffer& agent,
	replay::PrioritizedBuffer* expert, const replay::RatioState& ratio, std::mt19937_64& rng);

/// Stochastic action for exploration.
double sample_action(const Mlp& policy, const numerics::Vector& observation, std::mt19937_64& rng);
/// tanh(mu(s)).
double greedy_action(const Mlp& policy, const numerics::Vector& observation);

} // namespace sacfd::learner
