#include "sacfd/numerics/mlp.hpp"

#include "sacfd/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace sacfd::numerics {

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers))
{
	for (std::size_t i = 0; i < layers_.size(); ++i)
	{
		const auto& layer = layers_[i];
		if (layer.bias.size() != layer.weight.rows())
		{
			throw ConfigError(fmt::format("layer {}: bias has {} entries, weight has {} rows", i, layer.bias.size(), layer.weight.rows()));
		}
		if (i > 0 && layer.weight.cols() != layers_[i - 1].weight.rows())
		{
			throw ConfigError(fmt::format("layer {}: expects {} inputs but previous layer emits {}", i, layer.weight.cols(), layers_[i - 1].weight.rows()));
		}
	}
}

Mlp Mlp::initialized(std::span<const int> sizes, std::mt19937_64& rng, double output_scale)
{
	if (sizes.size() < 2)
	{
		throw ConfigError("an MLP needs at least an input and an output size");
	}
	std::vector<DenseLayer> layers;
	for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
	{
		const int fan_in = sizes[i];
		const int fan_out = sizes[i + 1];
		if (fan_in <= 0 || fan_out <= 0)
		{
			throw ConfigError("layer sizes must be positive");
		}
		const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
		std::uniform_real_distribution<double> dist(-bound, bound);
		DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
		for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
		{
			for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
			{
				layer.weight(r, c) = dist(rng);
			}
		}
		for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
		{
			layer.bias(r) = dist(rng);
		}
		layers.push_back(std::move(layer));
	}
	layers.back().weight *= output_scale;
	return Mlp(std::move(layers));
}

Mlp Mlp::zeros_like(const Mlp& other)
{
	std::vector<DenseLayer> layers;
	layers.reserve(other.layers_.size());
	for (const auto& layer : other.layers_)
	{
		layers.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()), Vector::Zero(layer.bias.size())});
	}
	return Mlp(std::move(layers));
}

int Mlp::input_size() const
{
	return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int Mlp::output_size() const
{
	return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::size_t Mlp::parameter_count() const
{
	std::size_t count = 0;
	for (const auto& layer : layers_)
	{
		count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
	}
	return count;
}

bool Mlp::same_shape(const Mlp& other) const
{
	if (layers_.size() != other.layers_.size())
	{
		return false;
	}
	for (std::size_t i = 0; i < layers_.size(); ++i)
	{
		if (layers_[i].weight.rows() != other.layers_[i].weight.rows() || layers_[i].weight.cols() != other.layers_[i].weight.cols())
		{
			return false;
		}
	}
	return true;
}

bool Mlp::all_finite() const
{
	for (const auto& layer : layers_)
	{
		if (!layer.weight.allFinite() || !layer.bias.allFinite())
		{
			return false;
		}
	}
	return true;
}

std::vector<double> Mlp::flatten() const
{
	std::vector<double> values;
	values.reserve(parameter_count());
	for (const auto& layer : layers_)
	{
		for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
		{
			for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
			{
				values.push_back(layer.weight(r, c));
			}
		}
		for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
		{
			values.push_back(layer.bias(r));
		}
	}
	return values;
}

void Mlp::assign(std::span<const double> values)
{
	if (values.size() != parameter_count())
	{
		throw ConfigError(fmt::format("assign: expected {} values, got {}", parameter_count(), values.size()));
	}
	std::size_t k = 0;
	for (auto& layer : layers_)
	{
		for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
		{
			for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
			{
				layer.weight(r, c) = values[k++];
			}
		}
		for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
		{
			layer.bias(r) = values[k++];
		}
	}
}

Matrix forward(const Mlp& params, const Matrix& input, ForwardCache* cache)
{
	if (params.layer_count() == 0)
	{
		throw ConfigError("forward on an empty network");
	}
	if (input.rows() != params.input_size())
	{
		throw ConfigError(fmt::format("forward: input has {} rows, network expects {}", input.rows(), params.input_size()));
	}
	if (cache != nullptr)
	{
		cache->inputs.clear();
		cache->pre_activations.clear();
	}
	Matrix x = input;
	const auto& layers = params.layers();
	for (std::size_t i = 0; i < layers.size(); ++i)
	{
		Matrix z = layers[i].weight * x;
		z.colwise() += layers[i].bias;
		if (cache != nullptr)
		{
			cache->inputs.push_back(std::move(x));
			cache->pre_activations.push_back(z);
		}
		if (i + 1 < layers.size())
		{
			x = z.cwiseMax(0.0);
		}
		else
		{
			x = std::move(z);
		}
	}
	return x;
}

Vector forward(const Mlp& params, const Vector& input)
{
	return forward(params, Matrix(input)).col(0);
}

BackwardResult backward(const Mlp& params, const ForwardCache& cache, const Matrix& upstream)
{
	const auto& layers = params.layers();
	if (cache.inputs.size() != layers.size() || cache.pre_activations.size() != layers.size())
	{
		throw ConfigError("backward: cache does not match network depth");
	}
	const auto& last = cache.pre_activations.back();
	if (upstream.rows() != last.rows() || upstream.cols() != last.cols())
	{
		throw ConfigError(fmt::format("backward: upstream is {}x{}, output is {}x{}", upstream.rows(), upstream.cols(), last.rows(), last.cols()));
	}

	BackwardResult result{Mlp::zeros_like(params), Matrix()};
	Matrix delta = upstream;
	for (std::size_t n = layers.size(); n-- > 0;)
	{
		if (n + 1 < layers.size())
		{
			delta = delta.cwiseProduct((cache.pre_activations[n].array() > 0.0).cast<double>().matrix());
		}
		auto& grad = result.parameter_grad.layers()[n];
		grad.weight.noalias() = delta * cache.inputs[n].transpose();
		grad.bias = delta.rowwise().sum();
		delta = layers[n].weight.transpose() * delta;
	}
	result.input_grad = std::move(delta);
	return result;
}

void polyak_blend(Mlp& target, const Mlp& source, double weight)
{
	if (!target.same_shape(source))
	{
		throw ConfigError("polyak_blend: shape mismatch");
	}
	for (std::size_t i = 0; i < target.layer_count(); ++i)
	{
		auto& t = target.layers()[i];
		const auto& s = source.layers()[i];
		t.weight = weight * s.weight + (1.0 - weight) * t.weight;
		t.bias = weight * s.bias + (1.0 - weight) * t.bias;
	}
}

void accumulate(Mlp& into, const Mlp& other, double scale)
{
	if (!into.same_shape(other))
	{
		throw ConfigError("accumulate: shape mismatch");
	}
	for (std::size_t i = 0; i < into.layer_count(); ++i)
	{
		into.layers()[i].weight += scale * other.layers()[i].weight;
		into.layers()[i].bias += scale * other.layers()[i].bias;
	}
}

} // namespace sacfd::numerics
