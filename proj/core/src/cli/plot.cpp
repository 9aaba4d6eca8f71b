#include "sacfd/cli/plot.hpp"

#include "sacfd/error.hpp"
#include "sacfd/numerics/checkpoint.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <sstream>

namespace sacfd::cli {

namespace {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path)
{
	std::istringstream in(numerics::read_text(path));
	std::vector<std::vector<std::string>> rows;
	std::string line;
	bool header_seen = false;
	while (std::getline(in, line))
	{
		if (line.empty() || line.front() == '#')
		{
			continue;
		}
		if (!header_seen)
		{
			header_seen = true;
			continue;
		}
		std::vector<std::string> fields;
		std::string field;
		std::istringstream ls(line);
		while (std::getline(ls, field, ','))
		{
			fields.push_back(field);
		}
		rows.push_back(std::move(fields));
	}
	return rows;
}

double to_double(const std::string& s)
{
	try
	{
		return std::stod(s);
	}
	catch (const std::exception&)
	{
		throw ConfigError(fmt::format("non-numeric CSV field '{}'", s));
	}
}

std::string escape(const std::string& s)
{
	std::string out;
	for (char c : s)
	{
		switch (c)
		{
		case '<':
			out += "&lt;";
			break;
		case '>':
			out += "&gt;";
			break;
		case '&':
			out += "&amp;";
			break;
		default:
			out += c;
		}
	}
	return out;
}

std::string tick_label(double v)
{
	if (std::abs(v) >= 1000.0)
	{
		return fmt::format("{:.0f}", v);
	}
	return fmt::format("{:.3g}", v);
}

constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

} // namespace

Series episode_rewards(const std::filesystem::path& run_dir, int window)
{
	Series s;
	s.label = run_dir.filename().string();
	std::deque<double> recent;
	double sum = 0.0;
	for (const auto& row : read_csv(run_dir / "episodes.csv"))
	{
		if (row.size() < 3)
		{
			continue;
		}
		const double r = to_double(row[2]);
		recent.push_back(r);
		sum += r;
		if (static_cast<int>(recent.size()) > std::max(1, window))
		{
			sum -= recent.front();
			recent.pop_front();
		}
		s.x.push_back(to_double(row[1]));
		s.y.push_back(sum / static_cast<double>(recent.size()));
	}
	return s;
}

Series eval_success(const std::filesystem::path& run_dir)
{
	Series s;
	s.label = run_dir.filename().string();
	for (const auto& row : read_csv(run_dir / "eval.csv"))
	{
		if (row.size() >= 2)
		{
			s.x.push_back(to_double(row[0]));
			s.y.push_back(to_double(row[1]));
		}
	}
	return s;
}

std::optional<double> expert_reference(const std::filesystem::path& run_dir)
{
	const auto path = run_dir / "run.json";
	if (!std::filesystem::exists(path))
	{
		return std::nullopt;
	}
	const auto j = nlohmann::json::parse(numerics::read_text(path), nullptr, false);
	if (j.is_discarded() || !j.contains("expert_mean_reward"))
	{
		return std::nullopt;
	}
	return j.at("expert_mean_reward").get<double>();
}

std::string render_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
	const std::string& y_label, std::optional<double> reference, const std::string& reference_label)
{
	constexpr double kWidth = 800, kHeight = 500, kLeft = 80, kRight = 180, kTop = 50, kBottom = 60;
	double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
	bool any = false;
	auto grow = [&](double x, double y) {
		if (!any)
		{
			x0 = x1 = x;
			y0 = y1 = y;
			any = true;
			return;
		}
		x0 = std::min(x0, x);
		x1 = std::max(x1, x);
		y0 = std::min(y0, y);
		y1 = std::max(y1, y);
	};
	for (const auto& s : series)
	{
		for (std::size_t i = 0; i < s.x.size(); ++i)
		{
			grow(s.x[i], s.y[i]);
		}
	}
	if (reference)
	{
		grow(any ? x0 : 0.0, *reference);
	}
	if (x1 <= x0)
	{
		x1 = x0 + 1.0;
	}
	if (y1 <= y0)
	{
		y1 = y0 + 1.0;
	}
	const double pad = 0.05 * (y1 - y0);
	y0 -= pad;
	y1 += pad;
	const double pw = kWidth - kLeft - kRight;
	const double ph = kHeight - kTop - kBottom;
	auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
	auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

	std::string out;
	auto add = [&out](const std::string& s) { out += s; };
	add(fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">)"
					"\n",
		kWidth, kHeight, kWidth, kHeight));
	add(fmt::format(R"(<rect width="{}" height="{}" fill="white"/>)"
					"\n",
		kWidth, kHeight));
	add(fmt::format(R"(<text x="{}" y="28" font-size="16" text-anchor="middle">{}</text>)"
					"\n",
		kLeft + pw / 2, escape(title)));
	add(fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>)"
					"\n",
		kLeft, kTop, pw, ph));
	for (int i = 0; i <= 5; ++i)
	{
		const double xv = x0 + (x1 - x0) * i / 5.0;
		const double yv = y0 + (y1 - y0) * i / 5.0;
		add(fmt::format(R"(<line x1="{0:.1f}" y1="{1}" x2="{0:.1f}" y2="{2}" stroke="#ddd"/>)"
						R"(<text x="{0:.1f}" y="{3}" text-anchor="middle">{4}</text>)"
						"\n",
			px(xv), kTop, kTop + ph, kTop + ph + 16, tick_label(xv)));
		add(fmt::format(R"(<line x1="{0}" y1="{1:.1f}" x2="{2}" y2="{1:.1f}" stroke="#ddd"/>)"
						R"(<text x="{3}" y="{4:.1f}" text-anchor="end">{5}</text>)"
						"\n",
			kLeft, py(yv), kLeft + pw, kLeft - 6, py(yv) + 4, tick_label(yv)));
	}
	add(fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{}</text>)"
					"\n",
		kLeft + pw / 2, kHeight - 20, escape(x_label)));
	add(fmt::format(R"svg(<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>)svg"
					"\n",
		kTop + ph / 2, escape(y_label)));

	double legend_y = kTop + 10;
	auto legend = [&](const std::string& color, const std::string& label, bool dashed) {
		add(fmt::format(R"(<line x1="{}" y1="{:.1f}" x2="{}" y2="{:.1f}" stroke="{}" stroke-width="2"{}/>)"
						R"(<text x="{}" y="{:.1f}">{}</text>)"
						"\n",
			kLeft + pw + 10, legend_y, kLeft + pw + 35, legend_y, color, dashed ? " stroke-dasharray=\"6 4\"" : "",
			kLeft + pw + 40, legend_y + 4, escape(label)));
		legend_y += 18;
	};
	if (reference)
	{
		add(fmt::format(R"(<line x1="{}" y1="{:.1f}" x2="{}" y2="{:.1f}" stroke="#777" stroke-width="2" stroke-dasharray="6 4"/>)"
						"\n",
			kLeft, py(*reference), kLeft + pw, py(*reference)));
		legend("#777", reference_label, true);
	}
	for (std::size_t k = 0; k < series.size(); ++k)
	{
		const auto& s = series[k];
		const std::string color = kColors[k % kColors.size()];
		std::string points;
		for (std::size_t i = 0; i < s.x.size(); ++i)
		{
			points += fmt::format("{:.1f},{:.1f} ", px(s.x[i]), py(s.y[i]));
		}
		add(fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>)"
						"\n",
			color, points));
		legend(color, s.label, false);
	}
	add("</svg>\n");
	return out;
}

void plot_runs(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out)
{
	if (run_dirs.empty())
	{
		throw ConfigError("plot needs at least one run directory");
	}
	std::vector<Series> series;
	std::optional<double> reference;
	for (const auto& dir : run_dirs)
	{
		series.push_back(episode_rewards(dir));
		if (!reference)
		{
			reference = expert_reference(dir);
		}
	}
	numerics::write_text_atomically(out,
		render_svg(series, "Episode reward during training", "environment step", "episode reward (10-episode mean)",
			reference, "expert demonstrations"));
}

} // namespace sacfd::cli
