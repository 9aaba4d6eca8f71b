#pragma once

// Standalone re-implementation of the reward terms, written from the formulas only.
// Shares no code with the library.

#include <optional>

namespace oracle {

struct RewardParams {
	double v_max = 12.0;
	double v_min = 0.1;
	double r1 = 10.0;
	double r2 = 20.0;
	double lambda = 0.8;
	double step = -0.1;
	double collision = -10.0;
};

struct RewardParts {
	double rv;
	double rstep;
	double rcol;
	double rsafe;
	double total;
};

inline RewardParts reward(double v, double a, std::optional<double> d1, std::optional<double> d2, bool collided,
	const RewardParams& p = {})
{
	const double over = v >= p.v_max ? 1.0 : 0.0;
	const double rv = v + 2.0 * (p.v_max - v) * over;

	const double stopped_and_braking = (v <= p.v_min && a < 0.0) ? 1.0 : 0.0;
	const double vs = v * (1.0 - stopped_and_braking);

	const double near = d1.has_value() ? p.lambda * (p.r1 - d1.value()) / p.r1 : 0.0;
	const double far = d2.has_value() ? (1.0 - p.lambda) * (p.r2 - d2.value()) / p.r2 : 0.0;
	const double rsafe = -(near + far) * vs;

	const double rcol = collided ? p.collision : 0.0;
	return {rv, p.step, rcol, rsafe, rv + p.step + rcol + rsafe};
}

} // namespace oracle
