#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skipstep/batch.hpp"

namespace skipstep {

struct LineSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Scatter of the first two columns (a 1-D batch is drawn against its row index).
void write_scatter_svg(const Batch& points, const std::filesystem::path& path, const std::string& title,
                       const Batch* reference = nullptr);

void write_line_svg(const std::vector<LineSeries>& series, const std::filesystem::path& path,
                    const std::string& title, const std::string& x_label, const std::string& y_label);

}  // namespace skipstep
