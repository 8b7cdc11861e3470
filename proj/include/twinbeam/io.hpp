#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "twinbeam/core.hpp"
#include "twinbeam/quasi.hpp"
#include "twinbeam/statistics.hpp"
#include "twinbeam/synthetic.hpp"

namespace twinbeam::io {

/// Malformed input; the message carries "line L, column C" when known.
class ParseError : public Error
{
  public:
    ParseError(std::string const& what, std::size_t line, std::size_t column = 0);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    std::size_t line_;
    std::size_t column_;
};

/// 17 significant digits, enough to read back the identical double.
std::string format_value(double v);

// Matrix files:
//   # joint-distribution <rows> <cols>
//   one row per n_S, space separated, column index n_I; other '#' lines are comments.
void write_matrix(JointDistribution const& d, std::ostream& out);
void write_matrix(JointDistribution const& d, std::filesystem::path const& path);
JointDistribution read_matrix(std::istream& in);
JointDistribution read_matrix(std::filesystem::path const& path);

// Grid files:
//   # grid <n_x> <n_y>
//   x axis (n_x values), y axis (n_y values), then n_x rows of n_y values.
struct PlotGrid
{
    std::vector<double> x_axis;
    std::vector<double> y_axis;
    Matrix values;
};
void write_grid(PlotGrid const& grid, std::ostream& out);
void write_grid(PlotGrid const& grid, std::filesystem::path const& path);
PlotGrid read_grid(std::istream& in);
PlotGrid read_grid(std::filesystem::path const& path);

PlotGrid to_plot_grid(IntensityGrid const& grid);
PlotGrid to_plot_grid(QuasiGrid const& grid);
/// Margin p - bound over integer photon-number axes.
PlotGrid to_plot_grid(NonclassicalityMap const& map);

// Frame stream: one "c_S c_I" pair per line.
void write_frames(std::span<FrameSample const> frames, std::ostream& out);
std::vector<FrameSample> read_frames(std::istream& in);

/// Two columns: iteration, KL (nats).
void write_kl_history(std::span<double const> kl_history, std::ostream& out);

/// `key = value` lines; undefined quantities are printed as null.
void write_report(StatisticsReport const& report, std::ostream& out);

} // namespace twinbeam::io
