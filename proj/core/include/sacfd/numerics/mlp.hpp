#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace sacfd::numerics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DenseLayer {
	Matrix weight; // out x in
	Vector bias;   // out
};

/// Fully connected network: ReLU on every hidden layer, linear output.
///
/// Also used as the container for gradients and Adam moments, since those are
/// shaped exactly like the parameters they belong to.
class Mlp {
public:
	Mlp() = default;
	explicit Mlp(std::vector<DenseLayer> layers);

	/// Uniform init in +-1/sqrt(fan_in); the last layer's weights are further scaled by output_scale.
	static Mlp initialized(std::span<const int> sizes, std::mt19937_64& rng, double output_scale = 1.0);
	static Mlp zeros_like(const Mlp& other);

	int input_size() const;
	int output_size() const;
	std::size_t layer_count() const { return layers_.size(); }
	std::size_t parameter_count() const;

	const std::vector<DenseLayer>& layers() const { return layers_; }
	std::vector<DenseLayer>& layers() { return layers_; }

	bool same_shape(const Mlp& other) const;
	bool all_finite() const;

	/// Row-major flattening, layer by layer: weight then bias.
	std::vector<double> flatten() const;
	void assign(std::span<const double> values);

private:
	std::vector<DenseLayer> layers_;
};

/// Per-layer record of what backward needs. Columns are samples.
struct ForwardCache {
	std::vector<Matrix> inputs;
	std::vector<Matrix> pre_activations;
};

struct BackwardResult {
	Mlp parameter_grad;
	Matrix input_grad;
};

/// Batched forward pass; each column of `input` is one sample.
Matrix forward(const Mlp& params, const Matrix& input, ForwardCache* cache = nullptr);
Vector forward(const Mlp& params, const Vector& input);

/// Gradient of a scalar loss given dLoss/dOutput (`upstream`, same shape as the forward output).
BackwardResult backward(const Mlp& params, const ForwardCache& cache, const Matrix& upstream);

/// target <- weight * source + (1 - weight) * target, element-wise.
void polyak_blend(Mlp& target, const Mlp& source, double weight);

/// a += scale * b
void accumulate(Mlp& into, const Mlp& other, double scale = 1.0);

} // namespace sacfd::numerics
