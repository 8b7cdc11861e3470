#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "twinbeam/core.hpp"

namespace twinbeam {

/// s-ordering parameter and number of independent modes.
struct OrderingParams
{
    double s = 0.3;
    std::size_t m_modes = 50;

    /// Rejects s outside [-1, 1) (s = 1 is singular) and M < 1.
    void check() const;
};

/// Weight of rho(n_S, n_I) in the Laguerre series. `single` is the
/// Mandel-Rice inversion n_S! n_I! / [Gamma(n_S+M) Gamma(n_I+M)], which
/// integrates to one; `squared` squares the gamma denominator.
enum class GammaWeight
{
    single,
    squared,
};

/// Generalized Laguerre polynomial L_n^a(x) by the three-term recurrence.
double laguerre(std::size_t degree, double order, double x);

/// L_0^a(x) .. L_{n_max}^a(x) as (log|L|, sign) pairs. The recurrence is
/// rescaled on the fly so large degrees and arguments do not overflow.
struct SignedLogRow
{
    std::vector<double> log_abs;
    std::vector<int> sign;
};
SignedLogRow laguerre_row(std::size_t n_max, double order, double x);

/// Regular axis with `points` samples on [lo, hi].
std::vector<double> linear_axis(double lo, double hi, std::size_t points);

struct IntensityGrid
{
    std::vector<double> w_s_axis;
    std::vector<double> w_i_axis;
    Matrix values; // [w_s][w_i]
};

struct QuasiGrid
{
    std::vector<double> alpha_s_axis;
    std::vector<double> alpha_i_axis;
    Matrix values; // [alpha_s][alpha_i]
    double min_value = 0.0;
    double negative_fraction = 0.0;
};

/// Joint s-ordered integrated-intensity distribution P(W_S, W_I, s, M) on
/// the given axes (all W > 0). Every term is assembled in log-magnitude/sign
/// form and summed with Kahan compensation relative to the largest term.
/// Throws Error("non-finite term ...") if a cell cannot be represented.
IntensityGrid intensity_distribution(JointDistribution const& rho, OrderingParams const& params,
                                     std::span<double const> w_s_axis,
                                     std::span<double const> w_i_axis,
                                     GammaWeight weight = GammaWeight::single);

/// Phi(|alpha_S|, |alpha_I|) = P(|alpha_S|^2, |alpha_I|^2) / pi^2.
QuasiGrid quasi_distribution(JointDistribution const& rho, OrderingParams const& params,
                             std::span<double const> alpha_s_axis,
                             std::span<double const> alpha_i_axis,
                             GammaWeight weight = GammaWeight::single);

/// Trapezoid estimate of the double integral of P over the W grid.
double integrated_mass(IntensityGrid const& grid);

/// Same integral evaluated from an amplitude grid, using d^2 alpha = pi dW
/// over the phase-independent quasi-distribution.
double integrated_mass(QuasiGrid const& grid);

/// A grid is negative when min < -1e-12 * max|value|.
bool has_negativity(QuasiGrid const& grid);

struct NegativityScan
{
    double s0 = 0.0;
    struct Sample
    {
        double s;
        double min_value;
        bool negative;
    };
    std::vector<Sample> samples;
};

/// Bisection on s in [-1, 0.99] for the smallest s whose quasi-distribution
/// shows negativity on the grid; s0 is accurate to +-0.01. Throws
/// Error("no negativity found") if even s = 0.99 is nonnegative.
NegativityScan negativity_threshold_scan(JointDistribution const& rho, std::size_t m_modes,
                                         std::span<double const> alpha_s_axis,
                                         std::span<double const> alpha_i_axis,
                                         GammaWeight weight = GammaWeight::single);

} // namespace twinbeam
