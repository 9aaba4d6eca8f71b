#include "sacfd/error.hpp"
#include "sacfd/numerics/adam.hpp"
#include "sacfd/numerics/checkpoint.hpp"
#include "sacfd/numerics/mlp.hpp"
#include "sacfd/numerics/tanh_gaussian.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace sacfd::numerics;

namespace {

Mlp small_net(std::uint64_t seed, double scale = 1.0)
{
	std::mt19937_64 rng(seed);
	const std::vector<int> sizes{3, 5, 4, 2};
	return Mlp::initialized(sizes, rng, scale);
}

} // namespace

TEST(Mlp, InitializationRespectsFanInBounds)
{
	std::mt19937_64 rng(1);
	const std::vector<int> sizes{7, 64, 64, 2};
	const auto net = Mlp::initialized(sizes, rng, 1e-2);
	ASSERT_EQ(net.layer_count(), 3u);
	EXPECT_EQ(net.input_size(), 7);
	EXPECT_EQ(net.output_size(), 2);
	EXPECT_EQ(net.parameter_count(), 7u * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
	EXPECT_LE(net.layers()[0].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(7.0));
	EXPECT_LE(net.layers()[2].weight.cwiseAbs().maxCoeff(), 1e-2 / std::sqrt(64.0));
}

TEST(Mlp, FlattenAssignRoundTrip)
{
	auto net = small_net(2);
	auto flat = net.flatten();
	for (auto& x : flat)
	{
		x *= 2.0;
	}
	net.assign(flat);
	EXPECT_EQ(net.flatten(), flat);
	EXPECT_EQ(flat[0], 2.0 * small_net(2).layers()[0].weight(0, 0));
	EXPECT_EQ(flat[1], 2.0 * small_net(2).layers()[0].weight(0, 1)); // row-major
}

TEST(Mlp, ForwardMatchesHandComputation)
{
	DenseLayer l1{Matrix(2, 2), Vector(2)};
	l1.weight << 1.0, -1.0, 0.5, 2.0;
	l1.bias << 0.0, -1.0;
	DenseLayer l2{Matrix(1, 2), Vector(1)};
	l2.weight << 3.0, -2.0;
	l2.bias << 0.25;
	const Mlp net({l1, l2});
	Vector x(2);
	x << 1.0, 2.0;
	// hidden pre = [1 - 2, 0.5 + 4 - 1] = [-1, 3.5] -> relu [0, 3.5]; out = -7 + 0.25
	EXPECT_DOUBLE_EQ(forward(net, x)[0], -6.75);
}

TEST(Mlp, BatchedForwardEqualsPerColumn)
{
	const auto net = small_net(3);
	std::mt19937_64 rng(4);
	std::normal_distribution<double> n;
	Matrix x(3, 6);
	for (Eigen::Index i = 0; i < x.size(); ++i)
	{
		x.data()[i] = n(rng);
	}
	const Matrix out = forward(net, x);
	for (Eigen::Index c = 0; c < x.cols(); ++c)
	{
		const Vector col = forward(net, Vector(x.col(c)));
		EXPECT_EQ(out.col(c), col);
	}
}

TEST(Mlp, PolyakBlend)
{
	auto target = small_net(5);
	const auto source = small_net(6);
	auto expected = target.flatten();
	const auto s = source.flatten();
	for (std::size_t i = 0; i < expected.size(); ++i)
	{
		expected[i] = 0.005 * s[i] + 0.995 * expected[i];
	}
	polyak_blend(target, source, 0.005);
	const auto got = target.flatten();
	for (std::size_t i = 0; i < got.size(); ++i)
	{
		EXPECT_NEAR(got[i], expected[i], 1e-15);
	}
}

TEST(Adam, FirstStepMovesByLearningRate)
{
	auto params = small_net(7);
	auto grads = Mlp::zeros_like(params);
	auto g = grads.flatten();
	for (std::size_t i = 0; i < g.size(); ++i)
	{
		g[i] = (i % 2 == 0) ? 0.3 : -2.0;
	}
	grads.assign(g);
	const auto before = params.flatten();
	const auto result = adam_step(params, grads, AdamState::zeros_like(params));
	ASSERT_FALSE(result.skipped);
	const auto after = result.params.flatten();
	for (std::size_t i = 0; i < after.size(); ++i)
	{
		// bias-corrected first step: -lr * g / (|g| + eps')
		const double expected = before[i] - 3e-4 * g[i] / (std::abs(g[i]) + 1e-8);
		EXPECT_NEAR(after[i], expected, 1e-12);
	}
	EXPECT_EQ(result.state.step, 1);
	EXPECT_EQ(params.flatten(), before); // pure form leaves inputs alone
}

TEST(Adam, MatchesScalarRecursion)
{
	double x = 1.0;
	ScalarAdamState st;
	double m = 0.0, v = 0.0, ref = 1.0;
	for (int t = 1; t <= 50; ++t)
	{
		const double g = 2.0 * ref - 0.5;
		ASSERT_TRUE(adam_step_scalar(x, 2.0 * x - 0.5, st));
		m = 0.9 * m + 0.1 * g;
		v = 0.999 * v + 0.001 * g * g;
		const double mh = m / (1.0 - std::pow(0.9, t));
		const double vh = v / (1.0 - std::pow(0.999, t));
		ref -= 3e-4 * mh / (std::sqrt(vh) + 1e-8);
		EXPECT_NEAR(x, ref, 1e-14);
	}
}

TEST(Adam, NonFiniteGradientSkipsUpdate)
{
	auto params = small_net(8);
	auto grads = Mlp::zeros_like(params);
	auto g = grads.flatten();
	g[3] = std::nan("");
	grads.assign(g);
	auto state = AdamState::zeros_like(params);
	const auto before = params.flatten();
	EXPECT_FALSE(adam_step_in_place(params, grads, state));
	EXPECT_EQ(params.flatten(), before);
	EXPECT_EQ(state.step, 0);
	double s = 1.0;
	ScalarAdamState ss;
	EXPECT_FALSE(adam_step_scalar(s, INFINITY, ss));
	EXPECT_EQ(s, 1.0);
}

TEST(TanhGaussian, StableLogTermMatchesNaiveFormWhereBothAreAccurate)
{
	for (double x = -5.0; x <= 5.0; x += 0.37)
	{
		const double t = std::tanh(x);
		EXPECT_NEAR(log_one_minus_tanh_sq(x), std::log(1.0 - t * t), 1e-10);
	}
	// Far tails: naive form is -inf, stable form stays finite and ~ 2 log 2 - 2|x|.
	EXPECT_TRUE(std::isfinite(log_one_minus_tanh_sq(40.0)));
	EXPECT_NEAR(log_one_minus_tanh_sq(40.0), 2.0 * std::log(2.0) - 80.0, 1e-9);
	EXPECT_NEAR(log_one_minus_tanh_sq(-40.0), 2.0 * std::log(2.0) - 80.0, 1e-9);
}

TEST(TanhGaussian, HeadClampsLogStd)
{
	Vector raw(4);
	raw << 0.1, -0.2, 5.0, -30.0;
	const auto head = make_head(raw);
	EXPECT_EQ(head.mean, (Vector(2) << 0.1, -0.2).finished());
	EXPECT_EQ(head.log_std[0], kLogStdMax);
	EXPECT_EQ(head.log_std[1], kLogStdMin);
	EXPECT_EQ(head.log_std_pass.sum(), 0.0);
}

TEST(TanhGaussian, DensityIntegratesToOne)
{
	// Change of variables: integrate pi(a) over a in (-1, 1) by midpoint quadrature.
	Vector raw(2);
	raw << 0.4, std::log(0.7);
	const auto head = make_head(raw);
	const int n = 200000;
	double mass = 0.0;
	for (int i = 0; i < n; ++i)
	{
		const double a = -1.0 + (i + 0.5) * 2.0 / n;
		const double u = std::atanh(a);
		Vector noise(1);
		noise[0] = (u - 0.4) / 0.7;
		mass += std::exp(sample_tanh_gaussian(head, noise).log_prob) * 2.0 / n;
	}
	EXPECT_NEAR(mass, 1.0, 1e-4);
}

TEST(TanhGaussian, SampleGradientsMatchFiniteDifferences)
{
	Vector raw(2);
	raw << 0.3, -0.4;
	Vector noise(1);
	noise[0] = 0.8;
	const auto head = make_head(raw);
	const auto s = sample_tanh_gaussian(head, noise);
	const auto g = sample_gradients(head, noise, s);
	const double h = 1e-6;
	auto eval = [&](double mean, double ls) {
		Vector r(2);
		r << mean, ls;
		return sample_tanh_gaussian(make_head(r), noise);
	};
	EXPECT_NEAR(g.daction_dmean[0], (eval(0.3 + h, -0.4).action[0] - eval(0.3 - h, -0.4).action[0]) / (2 * h), 1e-8);
	EXPECT_NEAR(g.daction_dlog_std[0], (eval(0.3, -0.4 + h).action[0] - eval(0.3, -0.4 - h).action[0]) / (2 * h), 1e-8);
	EXPECT_NEAR(g.dlogp_dmean[0], (eval(0.3 + h, -0.4).log_prob - eval(0.3 - h, -0.4).log_prob) / (2 * h), 1e-7);
	EXPECT_NEAR(g.dlogp_dlog_std[0], (eval(0.3, -0.4 + h).log_prob - eval(0.3, -0.4 - h).log_prob) / (2 * h), 1e-7);
}

TEST(TanhGaussian, ActionStaysInsideOpenInterval)
{
	Vector raw(2);
	raw << 50.0, 2.0;
	Vector noise(1);
	noise[0] = 3.0;
	const auto s = sample_tanh_gaussian(make_head(raw), noise);
	EXPECT_LT(s.action[0], 1.0);
	EXPECT_TRUE(std::isfinite(s.log_prob));
	EXPECT_DOUBLE_EQ(deterministic_action(make_head(raw))[0], std::tanh(50.0));
}

TEST(Checkpoint, ParametersRoundTripExactly)
{
	const auto net = small_net(9);
	const auto path = std::filesystem::temp_directory_path() / "sacfd_params_roundtrip.json";
	save_parameters(path, net);
	const auto back = load_parameters(path);
	EXPECT_EQ(back.flatten(), net.flatten());
	std::filesystem::remove(path);
}

TEST(Checkpoint, AdamStateRoundTripsExactly)
{
	auto params = small_net(10);
	auto grads = small_net(11);
	auto state = AdamState::zeros_like(params);
	adam_step_in_place(params, grads, state);
	const auto back = adam_state_from_json(to_json(state));
	EXPECT_EQ(back.step, state.step);
	EXPECT_EQ(back.first_moment.flatten(), state.first_moment.flatten());
	EXPECT_EQ(back.second_moment.flatten(), state.second_moment.flatten());
}

TEST(Checkpoint, RejectsMalformedFiles)
{
	const auto path = std::filesystem::temp_directory_path() / "sacfd_params_bad.json";
	write_text_atomically(path, R"({"format":"something-else","version":1})");
	EXPECT_THROW(load_parameters(path), sacfd::ConfigError);
	write_text_atomically(path, "not json");
	EXPECT_THROW(load_parameters(path), sacfd::ConfigError);
	std::filesystem::remove(path);
	EXPECT_THROW(load_parameters(path), sacfd::ConfigError);
}
