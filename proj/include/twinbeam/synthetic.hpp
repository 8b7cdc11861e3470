#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "twinbeam/core.hpp"

namespace twinbeam {

/// Ideal twin-beam source: every frame holds n perfectly paired photons with
/// n ~ Poisson(mean_pairs).
struct IdealPairSource
{
    double mean_pairs = 14.5;
};

/// Poisson(mean) probabilities truncated at n_max and renormalized.
/// Throws if the neglected tail exceeds tail_epsilon.
MarginalDistribution poisson_marginal(double mean, std::size_t n_max, double tail_epsilon = 1e-9);

/// Bose-Einstein (single-mode thermal) probabilities with the given mean,
/// truncated at n_max and renormalized.
MarginalDistribution thermal_marginal(double mean, std::size_t n_max);

/// Single spike at n_fock on [0, n_max].
MarginalDistribution fock_marginal(std::size_t n_fock, std::size_t n_max);

/// Diagonal distribution p(n,n) = e^{-mu} mu^n / n!. Throws
/// Error("cutoff too small ...") if the Poisson tail beyond n_max exceeds
/// tail_epsilon.
JointDistribution ideal_pair_distribution(double mu, std::size_t n_max, double tail_epsilon = 1e-9);

/// Independent arms: p(n_S, n_I) = m_S(n_S) m_I(n_I).
JointDistribution product_distribution(MarginalDistribution const& signal,
                                       MarginalDistribution const& idler);

/// Mass of Poisson(mean) strictly above n_max, summed directly.
double poisson_tail_mass(double mean, std::size_t n_max);

struct FrameSample
{
    std::uint32_t c_s = 0;
    std::uint32_t c_i = 0;

    friend bool operator==(FrameSample const&, FrameSample const&) = default;
};

/// Frame-level Monte Carlo of the detection chain for one PRNG stream.
///
/// Each frame draws (n_S, n_I) from the source by inverse CDF over the
/// flattened matrix, thins each arm binomially with its effective
/// efficiency (Bernoulli summation up to 64 photons), and adds independent
/// Poissonian noise counts. The generator is std::mt19937_64 seeded from
/// std::seed_seq{seed_lo, seed_hi, stream_index}.
class FrameSampler
{
  public:
    FrameSampler(JointDistribution const& source, DetectionChannel signal, DetectionChannel idler,
                 std::uint64_t seed, std::uint64_t stream_index = 0);

    FrameSample next();

  private:
    std::uint32_t thin(std::uint32_t photons, double efficiency);
    std::uint32_t noise(double mean);

    std::vector<double> cumulative_;
    std::size_t cols_;
    DetectionChannel signal_;
    DetectionChannel idler_;
    std::mt19937_64 engine_;
};

struct SamplingOptions
{
    /// Worker threads; results do not depend on this value.
    unsigned threads = 1;
    /// Frames per independent PRNG stream.
    std::size_t frames_per_stream = std::size_t{1} << 16;
    bool keep_frames = false;
};

struct SampleResult
{
    /// Normalized (c_S, c_I) histogram, sized to the largest observed counts.
    JointDistribution histogram;
    /// Raw per-frame counts in stream order (only if keep_frames).
    std::vector<FrameSample> frames;
    double mean_c_s = 0.0;
    double mean_c_i = 0.0;
};

SampleResult sample_frames(JointDistribution const& source, DetectionChannel const& signal,
                           DetectionChannel const& idler, std::size_t n_frames,
                           std::uint64_t seed, SamplingOptions const& options = {});

} // namespace twinbeam
