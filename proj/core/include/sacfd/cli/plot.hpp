#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sacfd::cli {

struct Series {
	std::string label;
	std::vector<double> x;
	std::vector<double> y;
};

/// (end_step, reward) pairs from a run's episodes.csv, smoothed with a trailing mean.
Series episode_rewards(const std::filesystem::path& run_dir, int window = 10);
/// (step, success_rate) pairs from a run's eval.csv.
Series eval_success(const std::filesystem::path& run_dir);
/// expert_mean_reward from run.json, if the run used demonstrations.
std::optional<double> expert_reference(const std::filesystem::path& run_dir);

/// Line chart as a standalone SVG document; `reference` draws a dashed horizontal line.
std::string render_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
	const std::string& y_label, std::optional<double> reference = std::nullopt,
	const std::string& reference_label = "expert");

/// Reward-vs-step figure for several runs, written to `out`.
void plot_runs(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out);

} // namespace sacfd::cli
