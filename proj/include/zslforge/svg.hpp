#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "zslforge/rng.hpp"

namespace zslforge {

/// Scatter plot of 2D points colored by class label.
std::string scatter_svg(const Matd& points_2d, const std::vector<int>& labels,
                        int width = 640, int height = 480);

void write_scatter_svg(const std::filesystem::path& path,
                       const Matd& points_2d, const std::vector<int>& labels);

/// Companion table: one `x,y,class` row per point.
void write_scatter_csv(const std::filesystem::path& path,
                       const Matd& points_2d, const std::vector<int>& labels);

}  // namespace zslforge
