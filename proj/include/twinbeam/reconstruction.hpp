#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "twinbeam/core.hpp"
#include "twinbeam/forward_model.hpp"

namespace twinbeam {

enum class InitialGuess
{
    uniform,
    measured_copy,
    custom,
};

enum class StopReason
{
    none,
    kl_delta,
    max_iter,
    stagnation,
};

std::string_view to_string(StopReason reason);

/// Slack allowed on KL monotonicity before a run is declared stagnant.
inline constexpr double kKlMonotoneSlack = 1e-12;

struct EMConfig
{
    std::size_t max_iterations = 10000;
    double kl_delta_tol = 1e-10;
    InitialGuess initial = InitialGuess::uniform;
    /// Used when initial == custom; must match the photon grid.
    std::optional<JointDistribution> custom_initial;

    void check() const;
};

/// EM iterate rho^(n) together with its forward prediction and the KL
/// history of every iterate so far (kl_history[k] belongs to rho^(k)).
struct EMState
{
    JointDistribution current;
    Matrix prediction;
    std::size_t iteration = 0;
    std::vector<double> kl_history;
    bool converged = false;
    StopReason stop_reason = StopReason::none;
};

/// sum f ln(f / predicted) over cells with f > 0. Shapes are zero-padded to
/// match. Throws if predicted vanishes where f is positive.
double kl_divergence(JointDistribution const& f, JointDistribution const& predicted);

/// K_S rho K_I^T, contracted one arm at a time.
Matrix predict_counts(Matrix const& rho, DetectionKernel const& signal, DetectionKernel const& idler);

/// State for rho^(0) = initial. f must already have the kernels' count shape.
EMState initial_state(JointDistribution const& initial, JointDistribution const& f,
                      DetectionKernel const& signal, DetectionKernel const& idler);

/// One multiplicative EM update followed by renormalization.
EMState em_step(EMState const& state, JointDistribution const& f, DetectionKernel const& signal,
                DetectionKernel const& idler);

/// Observer called after every step; return false to abort the run early.
using EMObserver = std::function<bool(EMState const&)>;

/// Iterates em_step from the configured rho^(0) until |KL_n - KL_{n-1}| falls
/// below kl_delta_tol (or KL_n itself does), or max_iterations is reached.
EMState reconstruct(JointDistribution const& f, DetectionKernel const& signal,
                    DetectionKernel const& idler, EMConfig const& config,
                    EMObserver const& observer = {});

/// Builds both kernels from the channels and the policy, padding f to the
/// count cutoff when needed.
EMState reconstruct(JointDistribution const& f, DetectionChannel const& signal,
                    DetectionChannel const& idler, EMConfig const& config,
                    TruncationPolicy const& policy, EMObserver const& observer = {});

} // namespace twinbeam
