#pragma once

#include "sacfd/numerics/mlp.hpp"

namespace sacfd::numerics {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Mean and clamped log standard deviation of a diagonal Gaussian, pre-squash.
struct GaussianHead {
	Vector mean;
	Vector log_std;
	/// 1 where the raw log_std was inside the clamp range (gradient passes), 0 where clamped.
	Vector log_std_pass;
};

/// Splits a policy-network output of size 2d into mean (first d) and clamped log_std (last d).
GaussianHead make_head(const Vector& raw_output);

struct SquashedSample {
	Vector action;   // tanh(pre_tanh), strictly inside (-1, 1)
	Vector pre_tanh; // mean + std * noise
	double log_prob = 0.0;
};

/// Partial derivatives of a reparameterized sample, noise held fixed.
struct SquashedSampleGrad {
	Vector daction_dmean;
	Vector daction_dlog_std;
	Vector dlogp_dmean;
	Vector dlogp_dlog_std;
};

/// log(1 - tanh(x)^2) evaluated as 2 (log 2 - x - softplus(-2x)).
double log_one_minus_tanh_sq(double x);

SquashedSample sample_tanh_gaussian(const GaussianHead& head, const Vector& noise);
SquashedSampleGrad sample_gradients(const GaussianHead& head, const Vector& noise, const SquashedSample& sample);

/// tanh(mean): the action used for imitation and evaluation.
Vector deterministic_action(const GaussianHead& head);

} // namespace sacfd::numerics
