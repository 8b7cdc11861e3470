#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "twinbeam/core.hpp"

namespace twinbeam {

/// Normalized signal-idler photon-number correlation
/// <dn_S dn_I> / sqrt(<dn_S^2><dn_I^2>). Throws Error("degenerate marginal")
/// when either arm has zero variance.
double covariance_cp(JointDistribution const& d);

/// K = <n^2>/<n>^2 - 1/<n>: 1 for Poissonian, 2 for thermal, < 1 for Fock.
/// Throws Error("zero mean") for a vacuum marginal.
double k_coefficient(MarginalDistribution const& m);

/// Largest p(n_S, n_I) any classical field can reach:
/// (n_S^n_S e^{-n_S}/n_S!) (n_I^n_I e^{-n_I}/n_I!), with 0^0 = 1.
double classicality_bound(std::size_t n_s, std::size_t n_i);

struct StatisticsReport
{
    double mean_s = 0.0;
    double mean_i = 0.0;
    double var_s = 0.0;
    double var_i = 0.0;
    /// Empty when the quantity is undefined (degenerate marginal / zero mean).
    std::optional<double> covariance_cp;
    std::optional<double> k_s;
    std::optional<double> k_i;
};

StatisticsReport compute_statistics(JointDistribution const& d);

/// Cellwise comparison against classicality_bound. A cell violates the bound
/// only if it strictly exceeds it.
class NonclassicalityMap
{
  public:
    explicit NonclassicalityMap(Matrix margin);

    Matrix const& margin() const { return margin_; }
    bool violated(std::size_t n_s, std::size_t n_i) const { return margin_(n_s, n_i) > 0.0; }

    std::size_t violation_count() const;
    std::vector<std::pair<std::size_t, std::size_t>> violating_cells() const;
    /// Largest |n_S - n_I| among violating cells (0 if none).
    std::size_t max_diagonal_offset() const;

  private:
    Matrix margin_;
};

NonclassicalityMap nonclassicality_map(JointDistribution const& d);

} // namespace twinbeam
