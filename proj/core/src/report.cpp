// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

namespace l1ra {
namespace {

constexpr std::array<const char*, kSitesPerLayer> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                              "#9467bd", "#8c564b", "#e377c2"};

std::string kind_header(std::string_view first) {
  std::string out(first);
  for (SiteKind kind : kSiteKinds) {
    out += ',';
    out += site_name(kind);
  }
  out += '\n';
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string svg_open(int width, int height) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      width, height);
}

double max_rank(const RankSummaries& s) {
  double top = 1.0;
  for (const auto& row : s.kind_mean_by_step) {
    for (double v : row) top = std::max(top, v);
  }
  for (std::size_t k = 0; k < s.final_mean.size(); ++k) top = std::max(top, s.final_mean[k] + s.final_std[k]);
  return top;
}

}  // namespace

RankSummaries summarize_ranks(std::span<const RankLogRecord> history) {
  if (history.empty()) throw std::invalid_argument("rank report: history is empty");
  int n_layers = 0;
  for (const auto& rec : history) n_layers = std::max(n_layers, rec.site.layer + 1);

  using Grid = std::vector<std::array<std::optional<int>, kSitesPerLayer>>;
  std::map<long, Grid> by_step;
  for (const auto& rec : history) {
    if (rec.site.layer < 0) throw std::invalid_argument("rank report: negative layer index");
    auto [it, inserted] = by_step.try_emplace(rec.step, Grid(static_cast<std::size_t>(n_layers)));
    (void)inserted;
    it->second[static_cast<std::size_t>(rec.site.layer)][static_cast<std::size_t>(rec.site.kind)] = rec.rank;
  }

  RankSummaries s;
  s.n_layers = n_layers;
  for (const auto& [step, grid] : by_step) {
    KindRow means{};
    for (std::size_t l = 0; l < grid.size(); ++l) {
      for (std::size_t k = 0; k < kSitesPerLayer; ++k) {
        if (!grid[l][k]) {
          throw std::invalid_argument(fmt::format("rank report: step {} has no record for layer {} site {}", step, l,
                                                  site_name(kSiteKinds[k])));
        }
        means[k] += *grid[l][k];
      }
    }
    for (double& m : means) m /= n_layers;
    s.steps.push_back(step);
    s.kind_mean_by_step.push_back(means);
  }

  const Grid& last = by_step.rbegin()->second;
  s.final_mean = s.kind_mean_by_step.back();
  for (const auto& row : last) {
    std::array<int, kSitesPerLayer> ranks{};
    for (std::size_t k = 0; k < kSitesPerLayer; ++k) {
      ranks[k] = *row[k];
      const double d = *row[k] - s.final_mean[k];
      s.final_std[k] += d * d;
    }
    s.final_grid.push_back(ranks);
  }
  for (double& v : s.final_std) v = std::sqrt(v / n_layers);
  return s;
}

std::string rank_history_csv(std::span<const RankLogRecord> history) {
  std::string out = "step,layer,site,rank\n";
  for (const auto& rec : history) {
    out += fmt::format("{},{},{},{}\n", rec.step, rec.site.layer, site_name(rec.site.kind), rec.rank);
  }
  return out;
}

std::string kind_mean_csv(const RankSummaries& s) {
  std::string out = kind_header("step");
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    out += fmt::format("{}", s.steps[i]);
    for (double v : s.kind_mean_by_step[i]) out += fmt::format(",{:.6f}", v);
    out += '\n';
  }
  return out;
}

std::string final_by_kind_csv(const RankSummaries& s) {
  std::string out = "site,mean,std\n";
  for (std::size_t k = 0; k < kSitesPerLayer; ++k) {
    out += fmt::format("{},{:.6f},{:.6f}\n", site_name(kSiteKinds[k]), s.final_mean[k], s.final_std[k]);
  }
  return out;
}

std::string final_grid_csv(const RankSummaries& s) {
  std::string out = kind_header("layer");
  for (std::size_t l = 0; l < s.final_grid.size(); ++l) {
    out += fmt::format("{}", l);
    for (int r : s.final_grid[l]) out += fmt::format(",{}", r);
    out += '\n';
  }
  return out;
}

std::string rank_evolution_svg(const RankSummaries& s) {
  constexpr int kW = 640, kH = 360, kLeft = 50, kRight = 90, kTop = 30, kBottom = 40;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  const double top = max_rank(s);
  const long first = s.steps.front();
  const long span = std::max(1L, s.steps.back() - first);
  const auto px = [&](long step) { return kLeft + plot_w * static_cast<double>(step - first) / static_cast<double>(span); };
  const auto py = [&](double r) { return kTop + plot_h * (1.0 - r / top); };

  std::string out = svg_open(kW, kH);
  out += fmt::format("<text x=\"{}\" y=\"18\" font-size=\"13\">Mean rank per matrix kind</text>\n", kLeft);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop, kH - kBottom);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, kH - kBottom,
                     kW - kRight);
  out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kLeft, kH - kBottom + 15, first);
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", kW - kRight, kH - kBottom + 15,
                     s.steps.back());
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1f}</text>\n", kLeft - 4, kTop + 4, top);
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">0</text>\n", kLeft - 4, kH - kBottom);
  for (std::size_t k = 0; k < kSitesPerLayer; ++k) {
    std::string points;
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
      points += fmt::format("{}{:.2f},{:.2f}", i == 0 ? "" : " ", px(s.steps[i]), py(s.kind_mean_by_step[i][k]));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", kPalette[k],
                       points);
    const double ly = kTop + 14.0 * static_cast<double>(k);
    out += fmt::format("<rect x=\"{}\" y=\"{:.0f}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n", kW - kRight + 10, ly,
                       kPalette[k]);
    out += fmt::format("<text x=\"{}\" y=\"{:.0f}\">{}</text>\n", kW - kRight + 24, ly + 9, site_name(kSiteKinds[k]));
  }
  out += "</svg>\n";
  return out;
}

std::string final_distribution_svg(const RankSummaries& s) {
  constexpr int kW = 480, kH = 320, kLeft = 50, kTop = 30, kBottom = 40;
  const double plot_h = kH - kTop - kBottom;
  const double top = max_rank(s);
  const double slot = static_cast<double>(kW - kLeft - 20) / kSitesPerLayer;
  const auto py = [&](double r) { return kTop + plot_h * (1.0 - r / top); };

  std::string out = svg_open(kW, kH);
  out += fmt::format("<text x=\"{}\" y=\"18\" font-size=\"13\">Final rank per matrix kind (mean, std)</text>\n", kLeft);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop, kH - kBottom);
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1f}</text>\n", kLeft - 4, kTop + 4, top);
  for (std::size_t k = 0; k < kSitesPerLayer; ++k) {
    const double x = kLeft + slot * static_cast<double>(k) + slot * 0.15;
    const double w = slot * 0.7;
    const double mean = s.final_mean[k];
    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x, py(mean),
                       w, py(0.0) - py(mean), kPalette[k]);
    const double cx = x + w / 2.0;
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
                       py(std::max(0.0, mean - s.final_std[k])), py(mean + s.final_std[k]));
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", cx, kH - kBottom + 15,
                       site_name(kSiteKinds[k]));
  }
  out += "</svg>\n";
  return out;
}

std::string final_grid_svg(const RankSummaries& s) {
  constexpr int kCell = 40, kLeft = 60, kTop = 50;
  const int width = kLeft + kCell * kSitesPerLayer + 20;
  const int height = kTop + kCell * s.n_layers + 20;
  int lo = s.final_grid.front()[0];
  int hi = lo;
  for (const auto& row : s.final_grid) {
    for (int r : row) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  std::string out = svg_open(width, height);
  out += fmt::format("<text x=\"{}\" y=\"18\" font-size=\"13\">Final rank, layer x kind</text>\n", kLeft);
  for (std::size_t k = 0; k < kSitesPerLayer; ++k) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       kLeft + kCell * static_cast<int>(k) + kCell / 2, kTop - 6, site_name(kSiteKinds[k]));
  }
  for (std::size_t l = 0; l < s.final_grid.size(); ++l) {
    const int y = kTop + kCell * static_cast<int>(l);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">layer {}</text>\n", kLeft - 6, y + kCell / 2 + 4, l);
    for (std::size_t k = 0; k < kSitesPerLayer; ++k) {
      const int r = s.final_grid[l][k];
      const double t = hi == lo ? 0.5 : static_cast<double>(r - lo) / static_cast<double>(hi - lo);
      const int shade = static_cast<int>(std::lround(235.0 - 190.0 * t));
      const int x = kLeft + kCell * static_cast<int>(k);
      out += fmt::format(
          "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({},{},255)\" stroke=\"white\"/>\n", x, y,
          kCell, kCell, shade, shade);
      out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n", x + kCell / 2,
                         y + kCell / 2 + 4, t > 0.6 ? "white" : "black", r);
    }
  }
  out += "</svg>\n";
  return out;
}

std::vector<std::filesystem::path> export_rank_summaries(std::span<const RankLogRecord> history,
                                                         const std::filesystem::path& out_dir) {
  const RankSummaries s = summarize_ranks(history);
  std::filesystem::create_directories(out_dir);
  const std::vector<std::pair<std::string, std::string>> files = {
      {"rank_history.csv", rank_history_csv(history)},
      {"kind_mean_rank_by_step.csv", kind_mean_csv(s)},
      {"final_rank_by_kind.csv", final_by_kind_csv(s)},
      {"final_rank_grid.csv", final_grid_csv(s)},
      {"rank_evolution.svg", rank_evolution_svg(s)},
      {"final_rank_distribution.svg", final_distribution_svg(s)},
      {"final_rank_grid.svg", final_grid_svg(s)},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    write_file(out_dir / name, text);
    written.push_back(out_dir / name);
  }
  return written;
}

}  // namespace l1ra
