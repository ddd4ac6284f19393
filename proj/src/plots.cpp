// Copyright 2026 The dualgrasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dualgrasp/harness.hpp"

namespace dualgrasp {
namespace {

constexpr double kWidth = 900.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                    "#bcbd22", "#17becf"};

Figure make_figure(const EpisodeLog& log, std::string name, std::string y_label,
                   std::vector<std::string> series) {
  Figure f;
  f.name = std::move(name);
  f.y_label = std::move(y_label);
  f.series = std::move(series);
  f.values.resize(f.series.size());
  f.boundaries = phase_boundaries(log);
  for (const LogRecord& r : log.records) {
    f.t.push_back(r.t);
    f.phase.push_back(r.phase);
  }
  return f;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<PhaseBoundary> phase_boundaries(const EpisodeLog& log) {
  std::vector<PhaseBoundary> out;
  for (size_t k = 1; k < log.records.size(); ++k) {
    if (log.records[k].phase != log.records[k - 1].phase) {
      out.push_back({log.records[k].t, log.records[k].phase});
    }
  }
  return out;
}

std::vector<Figure> episode_figures(const EpisodeLog& log) {
  std::vector<Figure> out;

  Figure v = make_figure(log, "velocity", "m/s",
                         {"ee1_vx", "ee1_vy", "ee1_vx_ref", "ee1_vy_ref", "ee2_vx",
                          "ee2_vy", "ee2_vx_ref", "ee2_vy_ref"});
  for (const LogRecord& r : log.records) {
    for (int i = 0; i < kNumRobots; ++i) {
      v.values[4 * i + 0].push_back(r.ee_v[i].x());
      v.values[4 * i + 1].push_back(r.ee_v[i].y());
      v.values[4 * i + 2].push_back(r.ee_v_ref[i].x());
      v.values[4 * i + 3].push_back(r.ee_v_ref[i].y());
    }
  }
  out.push_back(std::move(v));

  std::vector<std::string> names;
  for (int c = 1; c <= kNumContacts; ++c) names.push_back(fmt::format("lambda_n{}", c));
  for (int c = 1; c <= kNumContacts; ++c) names.push_back(fmt::format("lambda_t{}", c));
  Figure f = make_figure(log, "contact_forces", "N", names);
  for (const LogRecord& r : log.records) {
    for (int c = 0; c < kNumContacts; ++c) {
      f.values[c].push_back(r.contacts[c].normal_force);
      f.values[kNumContacts + c].push_back(r.contacts[c].tangential_force);
    }
  }
  out.push_back(std::move(f));

  names.clear();
  for (int i = 1; i <= kNumRobots; ++i) {
    for (int j = 1; j <= 3; ++j) names.push_back(fmt::format("tau{}_{}", i, j));
  }
  Figure tq = make_figure(log, "torques", "N m", names);
  for (const LogRecord& r : log.records) {
    for (int i = 0; i < kNumRobots; ++i) {
      for (int j = 0; j < 3; ++j) tq.values[3 * i + j].push_back(r.tau[i][j]);
    }
  }
  out.push_back(std::move(tq));
  return out;
}

void write_figure_csv(std::ostream& os, const Figure& figure) {
  os << "t,phase";
  for (const auto& s : figure.series) os << ',' << s;
  os << '\n';
  fmt::memory_buffer buf;
  for (size_t k = 0; k < figure.t.size(); ++k) {
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{:.17g},{}", figure.t[k],
                   to_string(figure.phase[k]));
    for (const auto& col : figure.values) {
      fmt::format_to(std::back_inserter(buf), ",{:.17g}", col[k]);
    }
    buf.push_back('\n');
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

void write_figure_svg(std::ostream& os, const Figure& figure) {
  double t0 = 0.0;
  double t1 = 1.0;
  if (!figure.t.empty()) {
    t0 = figure.t.front();
    t1 = std::max(figure.t.back(), t0 + 1e-9);
  }
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -y0;
  for (const auto& col : figure.values) {
    for (double v : col) {
      if (!std::isfinite(v)) continue;
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (!std::isfinite(y0)) {
    y0 = -1.0;
    y1 = 1.0;
  }
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double t) { return kLeft + (t - t0) / (t1 - t0) * pw; };
  auto sy = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  os << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      kWidth, kHeight);
  os << fmt::format("<title>{}</title>\n", xml_escape(figure.name));
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      kLeft, kTop, pw, ph);
  for (int i = 0; i <= 4; ++i) {
    const double tv = t0 + (t1 - t0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    os << fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n",
        sx(tv), kTop + ph + 16.0, tv);
    os << fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n",
        kLeft - 6.0, sy(yv) + 4.0, yv);
  }
  os << fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">t [s]</text>\n",
      kLeft + 0.5 * pw, kHeight - 10.0);
  os << fmt::format(
      "<text x=\"14\" y=\"{:.2f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 14 {:.2f})\">{}</text>\n",
      kTop + 0.5 * ph, kTop + 0.5 * ph, xml_escape(figure.y_label));

  for (const PhaseBoundary& b : figure.boundaries) {
    os << fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" "
        "stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        sx(b.t), kTop, kTop + ph);
    os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"gray\">{}</text>\n",
                      sx(b.t) + 3.0, kTop + 12.0, xml_escape(to_string(b.phase)));
  }

  for (size_t s = 0; s < figure.series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    os << fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1\" points=\"",
                      color);
    for (size_t k = 0; k < figure.t.size(); ++k) {
      const double v = figure.values[s][k];
      if (!std::isfinite(v)) continue;
      os << fmt::format("{:.2f},{:.2f} ", sx(figure.t[k]), sy(v));
    }
    os << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(s) + 8.0;
    os << fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" "
        "stroke=\"{3}\" stroke-width=\"2\"/>\n",
        kWidth - kRight + 10.0, ly, kWidth - kRight + 30.0, color);
    os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n",
                      kWidth - kRight + 35.0, ly + 4.0, xml_escape(figure.series[s]));
  }
  os << "</svg>\n";
}

void emit_plots(const EpisodeLog& log, const std::string& dir,
                const std::string& stem) {
  const std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  for (const Figure& f : episode_figures(log)) {
    const std::string name = stem + "_" + f.name;
    std::ofstream csv(base / (name + ".csv"));
    std::ofstream svg(base / (name + ".svg"));
    if (!csv || !svg) throw std::runtime_error("cannot write plots for " + name);
    write_figure_csv(csv, f);
    write_figure_svg(svg, f);
  }
}

}  // namespace dualgrasp
