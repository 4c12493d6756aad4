#include "mrsig/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mrsig/errors.hpp"
#include "mrsig/tasks.hpp"

namespace mrsig {

namespace {

constexpr std::array<std::array<double, 2>, 3> kVertices{{{0.0, 0.0}, {1.0, 0.0}, {0.5, kTriangleHeight}}};

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string fixed3(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
  std::string s(buf, res.ptr);
  return s == "-0.000" ? "0.000" : s;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(line, "bad number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(',', pos);
    out.push_back(line.substr(pos, next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

SimplexPoint simplex_project(const std::array<double, 3>& probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0)
      throw InvalidArgument("simplex_project: entries must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw InvalidArgument("simplex_project: entries sum to " + shortest(sum) + ", expected 1");
  SimplexPoint pt;
  pt.probs = probs;
  if (sum != 1.0)
    for (double& p : pt.probs) p /= sum;
  for (std::size_t k = 0; k < 3; ++k) {
    pt.x += pt.probs[k] * kVertices[k][0];
    pt.y += pt.probs[k] * kVertices[k][1];
  }
  return pt;
}

bool inside_triangle(double x, double y) {
  return y >= 0.0 && y <= std::numbers::sqrt3 * x && y <= std::numbers::sqrt3 * (1.0 - x);
}

std::array<double, 3> true_proportions(const ParticipantRecord& participant, Instrument instrument) {
  if (participant.weeks.empty())
    throw InsufficientData("true_proportions: participant " + participant.id + " has no weeks");
  std::array<double, 3> counts{0.0, 0.0, 0.0};
  for (const auto& w : participant.weeks)
    ++counts[static_cast<std::size_t>(state_label(w.score(instrument), instrument))];
  for (double& c : counts) c /= static_cast<double>(participant.weeks.size());
  return counts;
}

KernelDensity::KernelDensity(std::span<const SimplexPoint> points, double floor_sd) {
  if (points.size() < 2) throw InsufficientData("kde2d: need at least 2 points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    centers_.push_back({p.x, p.y});
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& c : centers_) {
    sxx += (c[0] - mx) * (c[0] - mx);
    sxy += (c[0] - mx) * (c[1] - my);
    syy += (c[1] - my) * (c[1] - my);
  }
  // Unbiased covariance scaled by Scott's factor squared, n^(-2/(d+4)) with d = 2.
  const double scale = std::pow(n, -1.0 / 3.0) / (n - 1.0);
  const double floor = floor_sd * floor_sd;
  h_xx_ = sxx * scale + floor;
  h_xy_ = sxy * scale;
  h_yy_ = syy * scale + floor;
  finish();
}

KernelDensity::KernelDensity(std::span<const SimplexPoint> points, double bandwidth, bool) {
  if (points.size() < 2) throw InsufficientData("kde2d: need at least 2 points");
  if (!(bandwidth > 0.0)) throw InvalidArgument("kde2d: bandwidth must be positive");
  for (const auto& p : points) centers_.push_back({p.x, p.y});
  h_xx_ = h_yy_ = bandwidth * bandwidth;
  h_xy_ = 0.0;
  finish();
}

void KernelDensity::finish() {
  const double det = h_xx_ * h_yy_ - h_xy_ * h_xy_;
  if (!(det > 0.0)) throw InvalidArgument("kde2d: singular bandwidth matrix");
  inv_xx_ = h_yy_ / det;
  inv_xy_ = -h_xy_ / det;
  inv_yy_ = h_xx_ / det;
  norm_ = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det) * static_cast<double>(centers_.size()));
}

double KernelDensity::operator()(double x, double y) const {
  double sum = 0.0;
  for (const auto& c : centers_) {
    const double dx = x - c[0];
    const double dy = y - c[1];
    const double q = inv_xx_ * dx * dx + 2.0 * inv_xy_ * dx * dy + inv_yy_ * dy * dy;
    sum += std::exp(-0.5 * q);
  }
  return sum * norm_;
}

double DensityGrid::enclosed_mass(double level) const {
  double total = 0.0;
  double above = 0.0;
  for (std::size_t c = 0; c < density.size(); ++c) {
    if (!inside[c]) continue;
    total += density[c];
    if (density[c] >= level) above += density[c];
  }
  return total > 0.0 ? above / total : 0.0;
}

double mass_level(const DensityGrid& grid, double fraction) {
  std::vector<double> values;
  for (std::size_t c = 0; c < grid.density.size(); ++c)
    if (grid.inside[c]) values.push_back(grid.density[c]);
  std::sort(values.begin(), values.end(), std::greater<>());
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  double acc = 0.0;
  for (double v : values) {
    acc += v;
    if (acc >= fraction * total) return v;
  }
  return values.empty() ? 0.0 : values.back();
}

namespace {

// Marching squares over cell centres. Segment endpoints are keyed by the grid edge they
// lie on, so neighbouring squares produce identical points and chaining is exact.
std::vector<Polyline> trace_contour(const DensityGrid& g, double level) {
  const std::size_t r = g.resolution;
  auto value = [&](std::size_t i, std::size_t j) { return g.density[j * r + i]; };
  // Edge ids: horizontal edge from (i,j) to (i+1,j) -> 2*(j*r+i); vertical (i,j)-(i,j+1) -> +1.
  auto h_edge = [&](std::size_t i, std::size_t j) { return 2 * (j * r + i); };
  auto v_edge = [&](std::size_t i, std::size_t j) { return 2 * (j * r + i) + 1; };
  auto edge_point = [&](std::size_t id) -> std::array<double, 2> {
    const std::size_t cell = id / 2;
    const std::size_t i = cell % r;
    const std::size_t j = cell / r;
    const bool vertical = id % 2 == 1;
    const std::size_t i2 = vertical ? i : i + 1;
    const std::size_t j2 = vertical ? j + 1 : j;
    const double a = value(i, j);
    const double b = value(i2, j2);
    const double t = a == b ? 0.5 : std::clamp((level - a) / (b - a), 0.0, 1.0);
    return {g.centre_x(i) + t * (g.centre_x(i2) - g.centre_x(i)),
            g.centre_y(j) + t * (g.centre_y(j2) - g.centre_y(j))};
  };

  std::vector<std::array<std::size_t, 2>> segments;
  for (std::size_t j = 0; j + 1 < r; ++j) {
    for (std::size_t i = 0; i + 1 < r; ++i) {
      const double v0 = value(i, j), v1 = value(i + 1, j), v2 = value(i + 1, j + 1),
                   v3 = value(i, j + 1);
      const int code = (v0 >= level) | (v1 >= level) << 1 | (v2 >= level) << 2 | (v3 >= level) << 3;
      if (code == 0 || code == 15) continue;
      const std::size_t e0 = h_edge(i, j), e1 = v_edge(i + 1, j), e2 = h_edge(i, j + 1),
                        e3 = v_edge(i, j);
      const bool centre_above = (v0 + v1 + v2 + v3) * 0.25 >= level;
      switch (code) {
        case 1: case 14: segments.push_back({e3, e0}); break;
        case 2: case 13: segments.push_back({e0, e1}); break;
        case 3: case 12: segments.push_back({e3, e1}); break;
        case 4: case 11: segments.push_back({e1, e2}); break;
        case 6: case 9: segments.push_back({e0, e2}); break;
        case 7: case 8: segments.push_back({e2, e3}); break;
        case 5:
          if (centre_above) {
            segments.push_back({e0, e1});
            segments.push_back({e2, e3});
          } else {
            segments.push_back({e3, e0});
            segments.push_back({e1, e2});
          }
          break;
        case 10:
          if (centre_above) {
            segments.push_back({e3, e0});
            segments.push_back({e1, e2});
          } else {
            segments.push_back({e0, e1});
            segments.push_back({e2, e3});
          }
          break;
        default: break;
      }
    }
  }

  std::unordered_map<std::size_t, std::vector<std::size_t>> by_edge;
  for (std::size_t s = 0; s < segments.size(); ++s)
    for (std::size_t e : segments[s]) by_edge[e].push_back(s);
  std::vector<char> used(segments.size(), 0);

  auto walk = [&](std::size_t first_seg, std::size_t start_edge) {
    Polyline line;
    std::vector<std::size_t> edges{start_edge};
    std::size_t seg = first_seg;
    std::size_t at = start_edge;
    while (true) {
      used[seg] = 1;
      at = segments[seg][0] == at ? segments[seg][1] : segments[seg][0];
      edges.push_back(at);
      std::size_t next = segments.size();
      for (std::size_t cand : by_edge[at])
        if (!used[cand]) next = cand;
      if (next == segments.size()) break;
      seg = next;
    }
    line.closed = edges.size() > 2 && edges.front() == edges.back();
    for (std::size_t e : edges) line.points.push_back(edge_point(e));
    return line;
  };

  std::vector<Polyline> lines;
  // Open chains start at an edge touched by a single segment.
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (used[s]) continue;
    for (std::size_t end : segments[s]) {
      if (by_edge[end].size() == 1) {
        lines.push_back(walk(s, end));
        break;
      }
    }
  }
  for (std::size_t s = 0; s < segments.size(); ++s)
    if (!used[s]) lines.push_back(walk(s, segments[s][0]));
  return lines;
}

}  // namespace

DensityGrid kde2d(std::span<const SimplexPoint> points, const KdeOptions& options) {
  if (points.size() < 2) throw InsufficientData("kde2d: need at least 2 points");
  if (options.resolution < 2) throw InvalidArgument("kde2d: resolution must be at least 2");
  const std::size_t r = options.resolution;
  DensityGrid g;
  g.resolution = r;
  g.cell_width = 1.0 / static_cast<double>(r);
  g.cell_height = kTriangleHeight / static_cast<double>(r);
  const KernelDensity kde = options.bandwidth
                                ? KernelDensity(points, *options.bandwidth, true)
                                : KernelDensity(points, std::max(g.cell_width, g.cell_height));
  g.bandwidth = kde.bandwidth_matrix();
  g.density.assign(r * r, 0.0);
  g.inside.assign(r * r, 0);
  double total = 0.0;
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < r; ++i) {
      const double x = g.centre_x(i);
      const double y = g.centre_y(j);
      if (!inside_triangle(x, y)) continue;
      g.inside[j * r + i] = 1;
      const double d = kde(x, y);
      g.density[j * r + i] = d;
      total += d;
    }
  }
  if (total > 0.0) {
    const double scale = 1.0 / (total * g.cell_width * g.cell_height);
    for (double& d : g.density) d *= scale;
  }
  std::array<double, 3> fractions = options.mass_levels;
  std::sort(fractions.begin(), fractions.end());
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw InvalidArgument("kde2d: mass levels must lie in (0, 1)");
    Contour c;
    c.mass_fraction = f;
    c.level = mass_level(g, f);
    c.lines = trace_contour(g, c.level);
    g.contours.push_back(std::move(c));
  }
  return g;
}

void emit_plot(const DensityGrid& grid, std::span<const SimplexPoint> points,
               const std::filesystem::path& stem, const PlotLabels& labels,
               std::span<const std::string> header) {
  const std::size_t r = grid.resolution;
  auto csv_path = stem;
  csv_path += ".csv";
  auto svg_path = stem;
  svg_path += ".svg";

  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    for (const auto& h : header) csv << "# " << h << '\n';
    csv << "# mrsig.spectrum_data v1\n";
    csv << "resolution," << r << '\n';
    csv << "bandwidth," << shortest(grid.bandwidth[0]) << ',' << shortest(grid.bandwidth[1]) << ','
        << shortest(grid.bandwidth[2]) << '\n';
    for (const auto& c : grid.contours)
      csv << "level," << shortest(c.mass_fraction) << ',' << shortest(c.level) << '\n';
    for (const auto& p : points)
      csv << "point," << shortest(p.probs[0]) << ',' << shortest(p.probs[1]) << ','
          << shortest(p.probs[2]) << ',' << shortest(p.x) << ',' << shortest(p.y) << '\n';
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t i = 0; i < r; ++i)
        csv << "cell," << i << ',' << j << ',' << int(grid.inside[j * r + i]) << ','
            << shortest(grid.at(i, j)) << '\n';
    if (!csv) throw IoError("failed writing " + csv_path.string());
  }

  // 500 px triangle side with a 60 px margin.
  constexpr double kSide = 500.0;
  constexpr double kMargin = 60.0;
  auto px = [&](double x) { return fixed3(kMargin + kSide * x); };
  auto py = [&](double y) { return fixed3(kMargin + kSide * (kTriangleHeight - y)); };

  std::ostringstream svg;
  const double width = 2 * kMargin + kSide;
  const double height = 2 * kMargin + kSide * kTriangleHeight;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  for (const auto& h : header) svg << "<!-- " << h << " -->\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed3(width) << "\" height=\""
      << fixed3(height) << "\" viewBox=\"0 0 " << fixed3(width) << ' ' << fixed3(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!labels.title.empty())
    svg << "<text x=\"" << fixed3(width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << labels.title << "</text>\n";

  // Density shading, block-averaged down to at most 100 x 100 blocks.
  const std::size_t block = std::max<std::size_t>(1, (r + 99) / 100);
  double max_density = 0.0;
  std::vector<double> shade;
  std::vector<std::array<std::size_t, 2>> shade_pos;
  for (std::size_t bj = 0; bj < r; bj += block) {
    for (std::size_t bi = 0; bi < r; bi += block) {
      double sum = 0.0;
      std::size_t n_inside = 0;
      for (std::size_t j = bj; j < std::min(r, bj + block); ++j)
        for (std::size_t i = bi; i < std::min(r, bi + block); ++i)
          if (grid.inside[j * r + i]) {
            sum += grid.at(i, j);
            ++n_inside;
          }
      if (n_inside == 0) continue;
      shade.push_back(sum / static_cast<double>(n_inside));
      shade_pos.push_back({bi, bj});
      max_density = std::max(max_density, shade.back());
    }
  }
  svg << "<g id=\"density\" stroke=\"none\" fill=\"#08306b\">\n";
  if (max_density > 0.0) {
    for (std::size_t k = 0; k < shade.size(); ++k) {
      const double opacity = shade[k] / max_density;
      if (opacity < 0.005) continue;
      const auto [bi, bj] = shade_pos[k];
      const double x0 = static_cast<double>(bi) * grid.cell_width;
      const double y1 = static_cast<double>(std::min(r, bj + block)) * grid.cell_height;
      const double w = static_cast<double>(std::min(r, bi + block) - bi) * grid.cell_width;
      const double h = static_cast<double>(std::min(r, bj + block) - bj) * grid.cell_height;
      svg << "<rect x=\"" << px(x0) << "\" y=\"" << py(y1) << "\" width=\"" << fixed3(kSide * w)
          << "\" height=\"" << fixed3(kSide * h) << "\" fill-opacity=\"" << fixed3(opacity)
          << "\"/>\n";
    }
  }
  svg << "</g>\n";

  // Darkest red for the innermost (smallest mass) contour.
  static constexpr std::array<const char*, 3> kReds{"#67000d", "#cb181d", "#fc9272"};
  svg << "<g id=\"contours\" fill=\"none\" stroke-width=\"1.5\">\n";
  for (std::size_t c = 0; c < grid.contours.size(); ++c) {
    const auto& contour = grid.contours[c];
    svg << "<g stroke=\"" << kReds[std::min<std::size_t>(c, 2)] << "\" data-mass=\""
        << shortest(contour.mass_fraction) << "\">\n";
    for (const auto& line : contour.lines) {
      if (line.points.size() < 2) continue;
      svg << "<path d=\"";
      for (std::size_t k = 0; k < line.points.size(); ++k)
        svg << (k == 0 ? "M" : " L") << px(line.points[k][0]) << ' ' << py(line.points[k][1]);
      if (line.closed) svg << " Z";
      svg << "\"/>\n";
    }
    svg << "</g>\n";
  }
  svg << "</g>\n";

  svg << "<g id=\"points\" fill=\"black\" fill-opacity=\"0.6\">\n";
  for (const auto& p : points)
    svg << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.y) << "\" r=\"2.5\"/>\n";
  svg << "</g>\n";

  svg << "<polygon points=\"" << px(0) << ',' << py(0) << ' ' << px(1) << ',' << py(0) << ' '
      << px(0.5) << ',' << py(kTriangleHeight) << "\" fill=\"none\" stroke=\"black\" "
      << "stroke-width=\"1.5\"/>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"14\">\n";
  svg << "<text x=\"" << px(0) << "\" y=\"" << fixed3(kMargin + kSide * kTriangleHeight + 22)
      << "\" text-anchor=\"middle\">" << labels.vertices[0] << "</text>\n";
  svg << "<text x=\"" << px(1) << "\" y=\"" << fixed3(kMargin + kSide * kTriangleHeight + 22)
      << "\" text-anchor=\"middle\">" << labels.vertices[1] << "</text>\n";
  svg << "<text x=\"" << px(0.5) << "\" y=\"" << fixed3(kMargin - 10)
      << "\" text-anchor=\"middle\">" << labels.vertices[2] << "</text>\n";
  svg << "</g>\n</svg>\n";

  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + svg_path.string());
  out << svg.str();
  if (!out) throw IoError("failed writing " + svg_path.string());
}

PlotData read_plot_data(const std::filesystem::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw IoError("cannot read " + csv.string());
  PlotData data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_commas(line);
    const std::string_view kind = f[0];
    auto want = [&](std::size_t n) {
      if (f.size() != n) throw ParseError(line_no, "expected " + std::to_string(n) + " fields");
    };
    if (kind == "resolution") {
      want(2);
      data.resolution = static_cast<std::size_t>(parse_double(f[1], line_no));
      data.density.assign(data.resolution * data.resolution, 0.0);
      data.inside.assign(data.resolution * data.resolution, 0);
    } else if (kind == "bandwidth") {
      want(4);
    } else if (kind == "level") {
      want(3);
      data.levels.push_back(parse_double(f[2], line_no));
    } else if (kind == "point") {
      want(6);
      SimplexPoint p;
      for (std::size_t k = 0; k < 3; ++k) p.probs[k] = parse_double(f[1 + k], line_no);
      p.x = parse_double(f[4], line_no);
      p.y = parse_double(f[5], line_no);
      data.points.push_back(p);
    } else if (kind == "cell") {
      want(5);
      const auto i = static_cast<std::size_t>(parse_double(f[1], line_no));
      const auto j = static_cast<std::size_t>(parse_double(f[2], line_no));
      if (i >= data.resolution || j >= data.resolution)
        throw ParseError(line_no, "cell index outside grid");
      data.inside[j * data.resolution + i] = f[3] == "1";
      data.density[j * data.resolution + i] = parse_double(f[4], line_no);
    } else {
      throw ParseError(line_no, "unknown record '" + std::string(kind) + "'");
    }
  }
  return data;
}

}  // namespace mrsig
