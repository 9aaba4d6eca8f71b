#include "sacfd/numerics/adam.hpp"

#include "sacfd/error.hpp"

#include <cmath>

namespace sacfd::numerics {

namespace {

template <typename Derived>
std::span<double> span_of(Eigen::PlainObjectBase<Derived>& m)
{
	return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Derived>
std::span<const double> span_of(const Eigen::PlainObjectBase<Derived>& m)
{
	return {m.data(), static_cast<std::size_t>(m.size())};
}

} // namespace

AdamState AdamState::zeros_like(const Mlp& params, AdamHyper hyper)
{
	return AdamState{Mlp::zeros_like(params), Mlp::zeros_like(params), 0, hyper};
}

void adam_kernel(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
	std::int64_t step, const AdamHyper& hyper)
{
	const double t = static_cast<double>(step);
	const double correction1 = 1.0 - std::pow(hyper.beta1, t);
	const double correction2 = 1.0 - std::pow(hyper.beta2, t);
	for (std::size_t i = 0; i < params.size(); ++i)
	{
		m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * grads[i];
		v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
		const double m_hat = m[i] / correction1;
		const double v_hat = v[i] / correction2;
		params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.eps);
	}
}

bool adam_step_in_place(Mlp& params, const Mlp& grads, AdamState& state)
{
	if (!params.same_shape(grads) || !params.same_shape(state.first_moment) || !params.same_shape(state.second_moment))
	{
		throw ConfigError("adam_step: parameter, gradient and moment shapes differ");
	}
	if (!grads.all_finite())
	{
		return false;
	}
	state.step += 1;
	for (std::size_t i = 0; i < params.layer_count(); ++i)
	{
		auto& p = params.layers()[i];
		const auto& g = grads.layers()[i];
		auto& m = state.first_moment.layers()[i];
		auto& v = state.second_moment.layers()[i];
		adam_kernel(span_of(p.weight), span_of(g.weight), span_of(m.weight), span_of(v.weight), state.step, state.hyper);
		adam_kernel(span_of(p.bias), span_of(g.bias), span_of(m.bias), span_of(v.bias), state.step, state.hyper);
	}
	return true;
}

AdamResult adam_step(const Mlp& params, const Mlp& grads, const AdamState& state)
{
	AdamResult result{params, state, false};
	result.skipped = !adam_step_in_place(result.params, grads, result.state);
	return result;
}

bool adam_step_scalar(double& value, double grad, ScalarAdamState& state)
{
	if (!std::isfinite(grad))
	{
		return false;
	}
	state.step += 1;
	adam_kernel({&value, 1}, {&grad, 1}, {&state.first_moment, 1}, {&state.second_moment, 1}, state.step, state.hyper);
	return true;
}

} // namespace sacfd::numerics
