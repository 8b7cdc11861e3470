#pragma once

#include <cstddef>
#include <vector>

#include "twinbeam/core.hpp"

namespace twinbeam {

/// Poisson probabilities e^{-mean} mean^k / k! for k = 0..k_max, by forward
/// recurrence (no factorials).
std::vector<double> poisson_pmf_table(double mean, std::size_t k_max);

/// Binomial probabilities C(n,l) p^l (1-p)^{n-l} for l = 0..n.
std::vector<double> binomial_pmf_row(std::size_t n, double p);

/// Probability of c registered counts given n incident photons: binomial
/// thinning by T*eta convolved with Poissonian noise of mean D.
double kernel_entry(DetectionChannel const& channel, std::size_t c, std::size_t n);

/// Tabulated detection kernel K[c][n], c in [0, C_max], n in [0, N_max].
class DetectionKernel
{
  public:
    DetectionKernel(Matrix values, DetectionChannel channel);

    std::size_t count_cutoff() const { return values_.rows() - 1; }
    std::size_t photon_cutoff() const { return values_.cols() - 1; }

    double operator()(std::size_t c, std::size_t n) const { return values_(c, n); }
    Matrix const& values() const { return values_; }
    DetectionChannel const& channel() const { return channel_; }

    /// Truncated column sum over c for fixed n.
    double column_sum(std::size_t n) const;

  private:
    Matrix values_;
    DetectionChannel channel_;
};

/// Throws Error("count cutoff too small ...") if any truncated column holds
/// less than 1 - tail_epsilon.
DetectionKernel build_kernel(DetectionChannel const& channel, TruncationPolicy const& policy);

struct ForwardResult
{
    JointDistribution measured;
    /// Mass lost to count truncation before renormalization.
    double discarded_mass = 0.0;
};

/// Measured-count distribution f(c_S, c_I) = sum p(n_S,n_I) K_S(c_S,n_S) K_I(c_I,n_I),
/// renormalized to 1.
ForwardResult forward(JointDistribution const& p, DetectionKernel const& signal,
                      DetectionKernel const& idler);

} // namespace twinbeam
