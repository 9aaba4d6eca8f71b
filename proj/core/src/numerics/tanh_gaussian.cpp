#include "sacfd/numerics/tanh_gaussian.hpp"

#include "sacfd/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sacfd::numerics {

namespace {

double softplus(double x)
{
	// log(1 + e^x) without overflow
	return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// tanh saturates to exactly 1.0 in double precision for |u| > ~19
const double kActionBound = std::nextafter(1.0, 0.0);

} // namespace

GaussianHead make_head(const Vector& raw_output)
{
	if (raw_output.size() % 2 != 0 || raw_output.size() == 0)
	{
		throw ConfigError("policy output must hold mean and log_std halves");
	}
	const Eigen::Index d = raw_output.size() / 2;
	GaussianHead head{raw_output.head(d), Vector(d), Vector(d)};
	for (Eigen::Index i = 0; i < d; ++i)
	{
		const double raw = raw_output(d + i);
		head.log_std(i) = std::clamp(raw, kLogStdMin, kLogStdMax);
		head.log_std_pass(i) = (raw > kLogStdMin && raw < kLogStdMax) ? 1.0 : 0.0;
	}
	return head;
}

double log_one_minus_tanh_sq(double x)
{
	return 2.0 * (std::numbers::ln2 - x - softplus(-2.0 * x));
}

SquashedSample sample_tanh_gaussian(const GaussianHead& head, const Vector& noise)
{
	if (noise.size() != head.mean.size())
	{
		throw ConfigError("noise dimension does not match action dimension");
	}
	SquashedSample sample{Vector(noise.size()), Vector(noise.size()), 0.0};
	for (Eigen::Index i = 0; i < noise.size(); ++i)
	{
		const double std_dev = std::exp(head.log_std(i));
		const double u = head.mean(i) + std_dev * noise(i);
		sample.pre_tanh(i) = u;
		sample.action(i) = std::clamp(std::tanh(u), -kActionBound, kActionBound);
		sample.log_prob += -0.5 * noise(i) * noise(i) - head.log_std(i) - kHalfLog2Pi - log_one_minus_tanh_sq(u);
	}
	return sample;
}

SquashedSampleGrad sample_gradients(const GaussianHead& head, const Vector& noise, const SquashedSample& sample)
{
	const Eigen::Index d = noise.size();
	SquashedSampleGrad grad{Vector(d), Vector(d), Vector(d), Vector(d)};
	for (Eigen::Index i = 0; i < d; ++i)
	{
		const double a = sample.action(i);
		const double sigma_xi = std::exp(head.log_std(i)) * noise(i);
		const double dtanh = 1.0 - a * a;
		grad.daction_dmean(i) = dtanh;
		grad.daction_dlog_std(i) = dtanh * sigma_xi;
		// d/du log(1 - tanh^2 u) = -2 tanh u
		grad.dlogp_dmean(i) = 2.0 * a;
		grad.dlogp_dlog_std(i) = -1.0 + 2.0 * a * sigma_xi;
	}
	return grad;
}

Vector deterministic_action(const GaussianHead& head)
{
	return head.mean.array().tanh().matrix();
}

} // namespace sacfd::numerics
