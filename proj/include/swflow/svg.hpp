#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "swflow/core.hpp"

namespace swflow {

/// Self-contained SVG scatter plot of a 2D point cloud.
inline void write_scatter_svg(const PointCloud& cloud, const std::string& path,
                              const std::string& title = "") {
  if (cloud.d != 2) throw DataError("write_scatter_svg: cloud must be 2D");
  if (cloud.n == 0) throw DataError("write_scatter_svg: empty cloud");

  double xmin = cloud.at(0, 0), xmax = xmin;
  double ymin = cloud.at(0, 1), ymax = ymin;
  for (std::size_t i = 0; i < cloud.n; ++i) {
    xmin = std::min(xmin, cloud.at(i, 0));
    xmax = std::max(xmax, cloud.at(i, 0));
    ymin = std::min(ymin, cloud.at(i, 1));
    ymax = std::max(ymax, cloud.at(i, 1));
  }
  const double xpad = std::max(0.05 * (xmax - xmin), 1e-9);
  const double ypad = std::max(0.05 * (ymax - ymin), 1e-9);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  constexpr double size = 640.0;
  constexpr double margin = 40.0;
  const double span = size - 2.0 * margin;
  const auto sx = [&](double x) {
    return margin + span * (x - xmin) / (xmax - xmin);
  };
  const auto sy = [&](double y) {
    return size - margin - span * (y - ymin) / (ymax - ymin);
  };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
      << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << " " << size
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << span
      << "\" height=\"" << span << "\" fill=\"none\" stroke=\"#444\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << size / 2
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">"
        << title << "</text>\n";
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "[%.3g, %.3g] x [%.3g, %.3g]", xmin, xmax, ymin,
                ymax);
  out << "<text x=\"" << margin << "\" y=\"" << size - 12
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#666\">" << buf
      << "</text>\n";
  for (std::size_t i = 0; i < cloud.n; ++i) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.4\" fill=\"#1f77b4\" "
                  "fill-opacity=\"0.5\"/>\n",
                  sx(cloud.at(i, 0)), sy(cloud.at(i, 1)));
    out << buf;
  }
  out << "</svg>\n";
  out.close();
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace swflow
