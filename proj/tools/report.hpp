#pragma once

#include "pdettc/core/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pdettc::cli {

/// Plain (ASCII) greyscale portable graymap of a field, min-max scaled.
/// Row 0 of the image is the top (largest y).
void write_pgm(const std::filesystem::path& path, const Field& field);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Line plot with one polyline per series; log10 y axis when every value
/// is positive.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<Series>& series);

}  // namespace pdettc::cli
