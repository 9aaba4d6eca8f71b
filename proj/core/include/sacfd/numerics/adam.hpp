#pragma once

#include "sacfd/numerics/mlp.hpp"

#include <cstdint>
#include <span>

namespace sacfd::numerics {

struct AdamHyper {
	double learning_rate = 3e-4;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double eps = 1e-8;
};

struct AdamState {
	Mlp first_moment;
	Mlp second_moment;
	std::int64_t step = 0;
	AdamHyper hyper;

	static AdamState zeros_like(const Mlp& params, AdamHyper hyper = {});
};

struct ScalarAdamState {
	double first_moment = 0.0;
	double second_moment = 0.0;
	std::int64_t step = 0;
	AdamHyper hyper;
};

struct AdamResult {
	Mlp params;
	AdamState state;
	bool skipped = false; // true when the gradient held a non-finite entry
};

/// Bias-corrected Adam on flat storage. `step` is the already-incremented step count.
void adam_kernel(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
	std::int64_t step, const AdamHyper& hyper);

/// Pure form: returns the updated parameters and state, leaving the inputs untouched.
AdamResult adam_step(const Mlp& params, const Mlp& grads, const AdamState& state);

/// Same arithmetic as adam_step, applied in place. Returns false (and leaves everything
/// untouched) when the gradient is not finite.
bool adam_step_in_place(Mlp& params, const Mlp& grads, AdamState& state);

bool adam_step_scalar(double& value, double grad, ScalarAdamState& state);

} // namespace sacfd::numerics
