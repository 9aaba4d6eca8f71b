#include "sacfd/learner/learner.hpp"

#include "sacfd/error.hpp"
#include "sacfd/numerics/tanh_gaussian.hpp"

#include <algorithm>
#include <cmath>

namespace sacfd::learner {

namespace {

using replay::Source;

constexpr double kHalfLog2Pi = 0.91893853320467274178;

std::vector<int> sizes(int in, const std::vector<int>& hidden, int out)
{
	std::vector<int> s{in};
	s.insert(s.end(), hidden.begin(), hidden.end());
	s.push_back(out);
	return s;
}

Vector row(const Matrix& m, Eigen::Index r)
{
	return m.row(r).transpose();
}

Vector standard_normal(Eigen::Index n, std::mt19937_64& rng)
{
	std::normal_distribution<double> normal(0.0, 1.0);
	Vector out(n);
	for (Eigen::Index i = 0; i < n; ++i)
	{
		out[i] = normal(rng);
	}
	return out;
}

LossAndGrad squared_error_loss(const Mlp& net, const Matrix& input, const Vector& targets, const Vector& weights)
{
	const Eigen::Index n = input.cols();
	if (targets.size() != n || weights.size() != n || n == 0)
	{
		throw ContractError("squared-error loss: batch sizes disagree");
	}
	numerics::ForwardCache cache;
	const Vector out = row(numerics::forward(net, input, &cache), 0);
	const Vector diff = out - targets;
	LossAndGrad result;
	result.per_sample = diff.array().square();
	result.loss = weights.dot(result.per_sample) / static_cast<double>(n);
	Matrix upstream(1, n);
	upstream.row(0) = (2.0 / static_cast<double>(n)) * weights.array() * diff.array();
	result.grad = numerics::backward(net, cache, upstream).parameter_grad;
	return result;
}

} // namespace

LearnerState LearnerState::initialize(const LearnerConfig& config, std::mt19937_64& rng)
{
	if (config.initial_alpha <= 0.0)
	{
		throw ConfigError("initial temperature must be positive");
	}
	const int obs = config.observation_size;
	LearnerState s;
	const auto policy_sizes = sizes(obs, config.hidden, 2);
	const auto q_sizes = sizes(obs + 1, config.hidden, 1);
	const auto v_sizes = sizes(obs, config.hidden, 1);
	s.policy = Mlp::initialized(policy_sizes, rng, config.policy_output_scale);
	s.q1 = Mlp::initialized(q_sizes, rng);
	s.q2 = Mlp::initialized(q_sizes, rng);
	s.value = Mlp::initialized(v_sizes, rng);
	s.value_target = s.value;
	const numerics::AdamHyper hyper{config.learning_rate};
	s.policy_opt = numerics::AdamState::zeros_like(s.policy, hyper);
	s.q1_opt = numerics::AdamState::zeros_like(s.q1, hyper);
	s.q2_opt = numerics::AdamState::zeros_like(s.q2, hyper);
	s.value_opt = numerics::AdamState::zeros_like(s.value, hyper);
	s.log_alpha = std::log(config.initial_alpha);
	s.alpha_opt.hyper = hyper;
	return s;
}

double LearnerState::alpha() const
{
	return std::exp(log_alpha);
}

BatchTensors BatchTensors::from(const replay::SampleBatch& batch)
{
	const auto n = static_cast<Eigen::Index>(batch.size());
	if (n == 0)
	{
		throw ContractError("empty replay batch");
	}
	const auto dim = static_cast<Eigen::Index>(batch.transitions.front().state.size());
	BatchTensors t;
	t.states.resize(dim, n);
	t.next_states.resize(dim, n);
	t.actions.resize(n);
	t.rewards.resize(n);
	t.not_done.resize(n);
	t.weights.resize(n);
	t.sources = batch.sources;
	for (Eigen::Index b = 0; b < n; ++b)
	{
		const auto& tr = batch.transitions[static_cast<std::size_t>(b)];
		for (Eigen::Index k = 0; k < dim; ++k)
		{
			t.states(k, b) = tr.state[static_cast<std::size_t>(k)];
			t.next_states(k, b) = tr.next_state[static_cast<std::size_t>(k)];
		}
		t.actions[b] = tr.action;
		t.rewards[b] = tr.reward;
		t.not_done[b] = tr.done ? 0.0 : 1.0;
		t.weights[b] = batch.weights[static_cast<std::size_t>(b)];
	}
	return t;
}

Matrix state_action(const Matrix& states, const Vector& actions)
{
	Matrix sa(states.rows() + 1, states.cols());
	sa.topRows(states.rows()) = states;
	sa.row(states.rows()) = actions.transpose();
	return sa;
}

PolicyBatch evaluate_policy(const Mlp& policy, const Matrix& states, const Vector& noise)
{
	const Eigen::Index n = states.cols();
	if (noise.size() != n)
	{
		throw ContractError("policy evaluation: one noise draw per sample required");
	}
	PolicyBatch pb;
	const Matrix out = numerics::forward(policy, states, &pb.cache);
	pb.mean = row(out, 0);
	pb.log_std.resize(n);
	pb.log_std_pass.resize(n);
	pb.action.resize(n);
	pb.log_prob.resize(n);
	for (Eigen::Index b = 0; b < n; ++b)
	{
		const double raw = out(1, b);
		pb.log_std[b] = std::clamp(raw, numerics::kLogStdMin, numerics::kLogStdMax);
		pb.log_std_pass[b] = (raw >= numerics::kLogStdMin && raw <= numerics::kLogStdMax) ? 1.0 : 0.0;
		const double u = pb.mean[b] + std::exp(pb.log_std[b]) * noise[b];
		pb.action[b] = std::clamp(std::tanh(u), -std::nextafter(1.0, 0.0), std::nextafter(1.0, 0.0));
		pb.log_prob[b] = -0.5 * noise[b] * noise[b] - pb.log_std[b] - kHalfLog2Pi - numerics::log_one_minus_tanh_sq(u);
	}
	return pb;
}

Vector q_target(const Mlp& value_target, const BatchTensors& batch, double gamma)
{
	const Vector v_next = row(numerics::forward(value_target, batch.next_states), 0);
	return batch.rewards + gamma * batch.not_done.cwiseProduct(v_next);
}

LossAndGrad critic_loss(const Mlp& q, const Matrix& state_actions, const Vector& targets, const Vector& weights)
{
	return squared_error_loss(q, state_actions, targets, weights);
}

Vector value_targets(const Mlp& q1, const Mlp& q2, const Matrix& states, const Vector& sampled_actions,
	const Vector& log_probs, double alpha)
{
	const Matrix sa = state_action(states, sampled_actions);
	const Vector a = row(numerics::forward(q1, sa), 0);
	const Vector b = row(numerics::forward(q2, sa), 0);
	return a.cwiseMin(b) - alpha * log_probs;
}

LossAndGrad value_loss(const Mlp& value, const Matrix& states, const Vector& targets, const Vector& weights)
{
	return squared_error_loss(value, states, targets, weights);
}

bool q_filter(double q1_expert, double q2_expert, double min_q_sampled)
{
	return q1_expert >= min_q_sampled || q2_expert >= min_q_sampled;
}

std::vector<bool> q_filter_mask(const Mlp& q1, const Mlp& q2, const BatchTensors& batch, const Vector& sampled_actions)
{
	const Matrix sa_expert = state_action(batch.states, batch.actions);
	const Matrix sa_sampled = state_action(batch.states, sampled_actions);
	const Matrix q1e = numerics::forward(q1, sa_expert);
	const Matrix q2e = numerics::forward(q2, sa_expert);
	const Matrix q1s = numerics::forward(q1, sa_sampled);
	const Matrix q2s = numerics::forward(q2, sa_sampled);
	std::vector<bool> mask(static_cast<std::size_t>(batch.size()), false);
	for (Eigen::Index b = 0; b < batch.size(); ++b)
	{
		if (batch.sources[static_cast<std::size_t>(b)] == Source::expert)
		{
			mask[static_cast<std::size_t>(b)] = q_filter(q1e(0, b), q2e(0, b), std::min(q1s(0, b), q2s(0, b)));
		}
	}
	return mask;
}

LossAndGrad policy_loss(const Mlp& policy, const Mlp& q1, const Mlp& q2, const BatchTensors& batch, const Vector& noise,
	const std::vector<bool>& imitation_mask, double alpha)
{
	const Eigen::Index n = batch.size();
	if (static_cast<Eigen::Index>(imitation_mask.size()) != n)
	{
		throw ContractError("policy loss: mask size disagrees with batch");
	}
	const PolicyBatch pb = evaluate_policy(policy, batch.states, noise);
	const Matrix sa = state_action(batch.states, pb.action);
	numerics::ForwardCache c1;
	numerics::ForwardCache c2;
	const Matrix q1v = numerics::forward(q1, sa, &c1);
	const Matrix q2v = numerics::forward(q2, sa, &c2);

	// dQ_min/da through whichever critic is smaller (ties go to the first).
	Matrix pick1 = Matrix::Zero(1, n);
	Matrix pick2 = Matrix::Zero(1, n);
	for (Eigen::Index b = 0; b < n; ++b)
	{
		if (q1v(0, b) <= q2v(0, b))
		{
			pick1(0, b) = 1.0;
		}
		else
		{
			pick2(0, b) = 1.0;
		}
	}
	const Matrix dq1 = numerics::backward(q1, c1, pick1).input_grad;
	const Matrix dq2 = numerics::backward(q2, c2, pick2).input_grad;
	const Eigen::Index action_row = batch.states.rows();

	LossAndGrad result;
	result.per_sample.resize(n);
	Matrix upstream = Matrix::Zero(2, n);
	const double inv_n = 1.0 / static_cast<double>(n);
	double total = 0.0;
	for (Eigen::Index b = 0; b < n; ++b)
	{
		const double w = batch.weights[b] * inv_n;
		if (batch.sources[static_cast<std::size_t>(b)] == Source::agent)
		{
			const double min_q = std::min(q1v(0, b), q2v(0, b));
			const double term = alpha * pb.log_prob[b] - min_q;
			result.per_sample[b] = term;
			const double a = pb.action[b];
			const double sigma = std::exp(pb.log_std[b]);
			const double da_dmu = 1.0 - a * a;
			const double da_dls = da_dmu * sigma * noise[b];
			const double dlogp_dmu = 2.0 * a;
			const double dlogp_dls = -1.0 + 2.0 * a * sigma * noise[b];
			const double dq_da = dq1(action_row, b) + dq2(action_row, b);
			upstream(0, b) = w * (alpha * dlogp_dmu - dq_da * da_dmu);
			upstream(1, b) = w * (alpha * dlogp_dls - dq_da * da_dls) * pb.log_std_pass[b];
			total += w * term;
		}
		else
		{
			if (!imitation_mask[static_cast<std::size_t>(b)])
			{
				result.per_sample[b] = 0.0;
				continue;
			}
			const double t = std::tanh(pb.mean[b]);
			const double diff = t - batch.actions[b];
			result.per_sample[b] = diff * diff;
			upstream(0, b) = w * 2.0 * diff * (1.0 - t * t);
			total += w * diff * diff;
		}
	}
	result.loss = total;
	result.grad = numerics::backward(policy, pb.cache, upstream).parameter_grad;
	return result;
}

TemperatureLoss temperature_loss(double log_alpha, const Vector& log_probs, double target_entropy)
{
	if (log_probs.size() == 0)
	{
		throw ContractError("temperature loss over an empty batch");
	}
	const double alpha = std::exp(log_alpha);
	const double m = (log_probs.array() + target_entropy).mean();
	return {-alpha * m, -alpha * m};
}

void polyak_update(Mlp& target, const Mlp& source, double weight)
{
	numerics::polyak_blend(target, source, weight);
}

LossReport train_step(LearnerState& state, const LearnerConfig& config, replay::PrioritizedBuffer& agent,
	replay::PrioritizedBuffer* expert, const replay::RatioState& ratio, std::mt19937_64& rng)
{
	LossReport report;
	report.alpha = state.alpha();
	report.rho = ratio.rho;
	if (agent.size() < static_cast<std::size_t>(config.warmup_steps))
	{
		report.warming_up = true;
		return report;
	}

	replay::SampleBatch sampled;
	if (expert != nullptr && !expert->empty())
	{
		replay::RatioState r = ratio;
		r.batch_size = config.batch_size;
		sampled = replay::compose_minibatch(r, agent, *expert, rng).batch;
	}
	else
	{
		sampled = agent.sample(static_cast<std::size_t>(config.batch_size), rng);
	}
	const BatchTensors batch = BatchTensors::from(sampled);
	const Eigen::Index n = batch.size();
	for (auto s : batch.sources)
	{
		(s == Source::agent ? report.agent_samples : report.expert_samples) += 1;
	}

	// Critics.
	const Vector y_q = q_target(state.value_target, batch, config.gamma);
	const Matrix sa = state_action(batch.states, batch.actions);
	const LossAndGrad l1 = critic_loss(state.q1, sa, y_q, batch.weights);
	const LossAndGrad l2 = critic_loss(state.q2, sa, y_q, batch.weights);
	report.q_loss1 = l1.loss;
	report.q_loss2 = l2.loss;
	report.skipped_updates += numerics::adam_step_in_place(state.q1, l1.grad, state.q1_opt) ? 0 : 1;
	report.skipped_updates += numerics::adam_step_in_place(state.q2, l2.grad, state.q2_opt) ? 0 : 1;

	// Value.
	const Vector noise = standard_normal(n, rng);
	const PolicyBatch pb = evaluate_policy(state.policy, batch.states, noise);
	const double alpha = state.alpha();
	const Vector y_v = value_targets(state.q1, state.q2, batch.states, pb.action, pb.log_prob, alpha);
	const LossAndGrad lv = value_loss(state.value, batch.states, y_v, batch.weights);
	report.value_loss = lv.loss;
	report.skipped_updates += numerics::adam_step_in_place(state.value, lv.grad, state.value_opt) ? 0 : 1;
	polyak_update(state.value_target, state.value, config.polyak);

	// Policy.
	const Vector policy_noise = config.share_policy_sample ? noise : standard_normal(n, rng);
	const Vector filter_actions =
		config.share_policy_sample ? pb.action : evaluate_policy(state.policy, batch.states, policy_noise).action;
	std::vector<bool> mask;
	if (config.q_filter)
	{
		mask = q_filter_mask(state.q1, state.q2, batch, filter_actions);
	}
	else
	{
		mask.assign(static_cast<std::size_t>(n), false);
		for (Eigen::Index b = 0; b < n; ++b)
		{
			mask[static_cast<std::size_t>(b)] = batch.sources[static_cast<std::size_t>(b)] == Source::expert;
		}
	}
	report.expert_passed = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
	if (report.expert_samples > 0)
	{
		report.filter_pass_fraction =
			static_cast<double>(report.expert_passed) / static_cast<double>(report.expert_samples);
	}
	const LossAndGrad lp = policy_loss(state.policy, state.q1, state.q2, batch, policy_noise, mask, alpha);
	double rl_sum = 0.0;
	double il_sum = 0.0;
	for (Eigen::Index b = 0; b < n; ++b)
	{
		(batch.sources[static_cast<std::size_t>(b)] == Source::agent ? rl_sum : il_sum) += lp.per_sample[b];
	}
	report.rl_policy_loss = report.agent_samples > 0 ? rl_sum / static_cast<double>(report.agent_samples) : 0.0;
	report.il_policy_loss = report.expert_samples > 0 ? il_sum / static_cast<double>(report.expert_samples) : 0.0;
	report.skipped_updates += numerics::adam_step_in_place(state.policy, lp.grad, state.policy_opt) ? 0 : 1;

	// Temperature.
	const TemperatureLoss lt = temperature_loss(state.log_alpha, pb.log_prob, config.target_entropy);
	report.alpha_loss = lt.loss;
	report.skipped_updates += numerics::adam_step_scalar(state.log_alpha, lt.grad_log_alpha, state.alpha_opt) ? 0 : 1;
	report.alpha = state.alpha();

	// Priorities.
	for (Eigen::Index b = 0; b < n; ++b)
	{
		const auto i = static_cast<std::size_t>(b);
		const double critic = 0.5 * (l1.per_sample[b] + l2.per_sample[b]);
		auto& buffer = sampled.sources[i] == Source::agent ? agent : *expert;
		const auto upd = buffer.update_priority(sampled.indices[i], lp.per_sample[b], critic);
		report.floored_priorities += upd.floored ? 1 : 0;
	}

	++state.updates;
	return report;
}

double sample_action(const Mlp& policy, const Vector& observation, std::mt19937_64& rng)
{
	Matrix states = observation;
	const PolicyBatch pb = evaluate_policy(policy, states, standard_normal(1, rng));
	return pb.action[0];
}

double greedy_action(const Mlp& policy, const Vector& observation)
{
	const Vector out = numerics::forward(policy, observation);
	return std::tanh(out[0]);
}

} // namespace sacfd::learner
