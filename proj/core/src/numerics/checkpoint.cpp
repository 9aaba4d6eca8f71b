#include "sacfd/numerics/checkpoint.hpp"

#include "sacfd/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace sacfd::numerics {

nlohmann::json to_json(const Mlp& params)
{
	nlohmann::json layers = nlohmann::json::array();
	for (const auto& layer : params.layers())
	{
		std::vector<double> weight;
		weight.reserve(static_cast<std::size_t>(layer.weight.size()));
		for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
		{
			for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
			{
				weight.push_back(layer.weight(r, c));
			}
		}
		std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
		layers.push_back({{"rows", layer.weight.rows()}, {"cols", layer.weight.cols()}, {"weight", weight}, {"bias", bias}});
	}
	return {{"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j)
{
	try
	{
		std::vector<DenseLayer> layers;
		for (const auto& entry : j.at("layers"))
		{
			const auto rows = entry.at("rows").get<Eigen::Index>();
			const auto cols = entry.at("cols").get<Eigen::Index>();
			const auto weight = entry.at("weight").get<std::vector<double>>();
			const auto bias = entry.at("bias").get<std::vector<double>>();
			if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(weight.size()) != rows * cols ||
				static_cast<Eigen::Index>(bias.size()) != rows)
			{
				throw ConfigError(fmt::format("layer {} has inconsistent shape", layers.size()));
			}
			DenseLayer layer{Matrix(rows, cols), Vector(rows)};
			for (Eigen::Index r = 0; r < rows; ++r)
			{
				for (Eigen::Index c = 0; c < cols; ++c)
				{
					layer.weight(r, c) = weight[static_cast<std::size_t>(r * cols + c)];
				}
				layer.bias(r) = bias[static_cast<std::size_t>(r)];
			}
			layers.push_back(std::move(layer));
		}
		return Mlp(std::move(layers));
	}
	catch (const nlohmann::json::exception& e)
	{
		throw ConfigError(fmt::format("malformed network: {}", e.what()));
	}
}

nlohmann::json to_json(const AdamState& state)
{
	return {
		{"step", state.step},
		{"learning_rate", state.hyper.learning_rate},
		{"beta1", state.hyper.beta1},
		{"beta2", state.hyper.beta2},
		{"eps", state.hyper.eps},
		{"first_moment", to_json(state.first_moment)},
		{"second_moment", to_json(state.second_moment)},
	};
}

AdamState adam_state_from_json(const nlohmann::json& j)
{
	try
	{
		AdamState state;
		state.step = j.at("step").get<std::int64_t>();
		state.hyper.learning_rate = j.at("learning_rate").get<double>();
		state.hyper.beta1 = j.at("beta1").get<double>();
		state.hyper.beta2 = j.at("beta2").get<double>();
		state.hyper.eps = j.at("eps").get<double>();
		state.first_moment = mlp_from_json(j.at("first_moment"));
		state.second_moment = mlp_from_json(j.at("second_moment"));
		return state;
	}
	catch (const nlohmann::json::exception& e)
	{
		throw ConfigError(fmt::format("malformed optimizer state: {}", e.what()));
	}
}

void write_text_atomically(const std::filesystem::path& path, const std::string& text)
{
	auto tmp = path;
	tmp += ".tmp";
	{
		std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
		out << text;
		out.flush();
		if (!out)
		{
			std::error_code ec;
			std::filesystem::remove(tmp, ec);
			throw RuntimeFailure(fmt::format("failed to write {}", path.string()));
		}
	}
	std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
	{
		throw ConfigError(fmt::format("cannot open {}", path.string()));
	}
	std::ostringstream buffer;
	buffer << in.rdbuf();
	return buffer.str();
}

void save_parameters(const std::filesystem::path& path, const Mlp& params)
{
	nlohmann::json j{{"format", "sacfd-params"}, {"version", kCheckpointVersion}, {"network", to_json(params)}};
	write_text_atomically(path, j.dump());
}

Mlp load_parameters(const std::filesystem::path& path)
{
	nlohmann::json j;
	try
	{
		j = nlohmann::json::parse(read_text(path));
	}
	catch (const nlohmann::json::parse_error& e)
	{
		throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
	}
	if (j.value("format", "") != "sacfd-params" || j.value("version", 0) != kCheckpointVersion)
	{
		throw ConfigError(fmt::format("{} is not a version {} parameter file", path.string(), kCheckpointVersion));
	}
	return mlp_from_json(j.at("network"));
}

} // namespace sacfd::numerics
