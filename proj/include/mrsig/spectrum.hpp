#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrsig/cohort.hpp"

namespace mrsig {

inline constexpr double kTriangleHeight = 0.86602540378443864676;  // sqrt(3)/2

/// A 3-component probability vector and its image in the equilateral triangle with
/// vertices (0,0), (1,0), (1/2, sqrt(3)/2).
struct SimplexPoint {
  std::array<double, 3> probs{};
  double x = 0.0;
  double y = 0.0;
};

/// Barycentric map. Entries must be >= 0 and sum to 1 within 1e-6; the vector is
/// renormalized before mapping.
SimplexPoint simplex_project(const std::array<double, 3>& probs);

bool inside_triangle(double x, double y);

/// Share of weeks answered "no answer", "normal", "elevated" over the whole record.
std::array<double, 3> true_proportions(const ParticipantRecord& participant, Instrument instrument);

/// Gaussian kernel density with a full 2x2 bandwidth matrix.
class KernelDensity {
 public:
  /// Scott's rule, H = n^(-1/3) * Cov, plus `floor_sd`^2 on the diagonal so coincident or
  /// collinear points still give a proper density.
  KernelDensity(std::span<const SimplexPoint> points, double floor_sd);
  /// Isotropic kernel with standard deviation `bandwidth`.
  KernelDensity(std::span<const SimplexPoint> points, double bandwidth, bool isotropic);

  /// Unnormalized over the triangle; integrates to 1 over the plane.
  double operator()(double x, double y) const;
  std::array<double, 3> bandwidth_matrix() const { return {h_xx_, h_xy_, h_yy_}; }

 private:
  void finish();
  std::vector<std::array<double, 2>> centers_;
  double h_xx_ = 0.0, h_xy_ = 0.0, h_yy_ = 0.0;
  double inv_xx_ = 0.0, inv_xy_ = 0.0, inv_yy_ = 0.0, norm_ = 0.0;
};

struct KdeOptions {
  std::size_t resolution = 200;
  /// Isotropic kernel sd; nullopt uses Scott's rule.
  std::optional<double> bandwidth;
  std::array<double, 3> mass_levels{0.25, 0.50, 0.75};
};

struct Polyline {
  std::vector<std::array<double, 2>> points;
  bool closed = false;
};

struct Contour {
  double mass_fraction = 0.0;  // share of the density mass enclosed
  double level = 0.0;          // density threshold
  std::vector<Polyline> lines;
};

/// Density on the triangle's bounding box; cells whose centre is outside are masked
/// and excluded from the normalization.
struct DensityGrid {
  std::size_t resolution = 0;
  double cell_width = 0.0;
  double cell_height = 0.0;
  std::vector<double> density;       // row-major, row j = y index; 0 on masked cells
  std::vector<std::uint8_t> inside;  // 1 where the cell centre lies in the triangle
  std::array<double, 3> bandwidth{}; // H_xx, H_xy, H_yy
  std::vector<Contour> contours;     // one per mass level, ascending fraction

  double centre_x(std::size_t i) const { return (static_cast<double>(i) + 0.5) * cell_width; }
  double centre_y(std::size_t j) const { return (static_cast<double>(j) + 0.5) * cell_height; }
  double at(std::size_t i, std::size_t j) const { return density[j * resolution + i]; }
  /// Share of grid mass in cells with density >= level.
  double enclosed_mass(double level) const;
};

DensityGrid kde2d(std::span<const SimplexPoint> points, const KdeOptions& options = {});

/// Highest-density-region threshold enclosing `fraction` of the grid mass.
double mass_level(const DensityGrid& grid, double fraction);

struct PlotLabels {
  std::string title;
  std::array<std::string, 3> vertices;  // at (0,0), (1,0), apex
};

/// Writes <stem>.csv (points and grid values) and <stem>.svg. `header` lines are
/// written as '#' comments into both files.
void emit_plot(const DensityGrid& grid, std::span<const SimplexPoint> points,
               const std::filesystem::path& stem, const PlotLabels& labels,
               std::span<const std::string> header = {});

struct PlotData {
  std::size_t resolution = 0;
  std::vector<double> density;
  std::vector<std::uint8_t> inside;
  std::vector<double> levels;
  std::vector<SimplexPoint> points;
};

/// Parses a <stem>.csv written by emit_plot.
PlotData read_plot_data(const std::filesystem::path& csv);

}  // namespace mrsig
