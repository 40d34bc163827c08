#include "zslforge/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "zslforge/errors.hpp"
#include "zslforge/io.hpp"

namespace zslforge {

namespace {

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                          "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
                          "#9c755f", "#bab0ac"};
constexpr int kPaletteSize = 10;

}  // namespace

std::string scatter_svg(const Matd& points_2d, const std::vector<int>& labels,
                        int width, int height) {
  if (points_2d.cols() != 2) throw InvalidArgument("scatter: points must be 2D");
  if (static_cast<Eigen::Index>(labels.size()) != points_2d.rows())
    throw InvalidArgument("scatter: one label per point");
  if (points_2d.rows() == 0) throw InvalidArgument("scatter: no points");

  // Stable class -> color assignment by ascending class id.
  std::map<int, int> color_of;
  for (const int c : labels) color_of.emplace(c, 0);
  int next = 0;
  for (auto& [c, idx] : color_of) idx = next++ % kPaletteSize;

  const double xmin = points_2d.col(0).minCoeff();
  const double xmax = points_2d.col(0).maxCoeff();
  const double ymin = points_2d.col(1).minCoeff();
  const double ymax = points_2d.col(1).maxCoeff();
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;
  const double yspan = ymax > ymin ? ymax - ymin : 1.0;
  const double margin = 24.0;
  const double sx = (width - 2 * margin) / xspan;
  const double sy = (height - 2 * margin) / yspan;

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                width, height, width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (Eigen::Index i = 0; i < points_2d.rows(); ++i) {
    const double px = margin + (points_2d(i, 0) - xmin) * sx;
    // SVG y grows downward.
    const double py = height - margin - (points_2d(i, 1) - ymin) * sy;
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\" "
                  "fill-opacity=\"0.8\"/>\n",
                  px, py,
                  kPalette[color_of.at(labels[static_cast<size_t>(i)])]);
    svg += buf;
  }
  // Legend.
  int row = 0;
  for (const auto& [c, idx] : color_of) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%d\" cy=\"%d\" r=\"4\" fill=\"%s\"/>"
                  "<text x=\"%d\" y=\"%d\" font-size=\"11\" "
                  "font-family=\"sans-serif\">class %d</text>\n",
                  width - 80, 16 + row * 16, kPalette[idx], width - 70,
                  20 + row * 16, c);
    svg += buf;
    ++row;
  }
  svg += "</svg>\n";
  return svg;
}

void write_scatter_svg(const std::filesystem::path& path,
                       const Matd& points_2d, const std::vector<int>& labels) {
  write_text_file(path, scatter_svg(points_2d, labels));
}

void write_scatter_csv(const std::filesystem::path& path,
                       const Matd& points_2d, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != points_2d.rows())
    throw InvalidArgument("scatter: one label per point");
  std::string out = "x,y,class\n";
  for (Eigen::Index i = 0; i < points_2d.rows(); ++i) {
    out += format_double(points_2d(i, 0)) + ',' +
           format_double(points_2d(i, 1)) + ',' +
           std::to_string(labels[static_cast<size_t>(i)]) + '\n';
  }
  write_text_file(path, out);
}

}  // namespace zslforge
