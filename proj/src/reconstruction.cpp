#include "twinbeam/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace twinbeam {

std::string_view to_string(StopReason reason)
{
    switch (reason)
    {
    case StopReason::none: return "none";
    case StopReason::kl_delta: return "kl_delta";
    case StopReason::max_iter: return "max_iter";
    case StopReason::stagnation: return "stagnation";
    }
    return "unknown";
}

void EMConfig::check() const
{
    if (max_iterations < 1)
        throw Error("EM config: max_iterations must be >= 1");
    if (!(kl_delta_tol > 0.0))
        throw Error("EM config: kl_delta_tol must be > 0");
    if (initial == InitialGuess::custom && !custom_initial)
        throw Error("EM config: custom initial guess requested but none given");
}

namespace {

[[noreturn]] void throw_zero_prediction(std::size_t cs, std::size_t ci)
{
    std::ostringstream msg;
    msg << "zero prediction under observed data at count cell (" << cs << "," << ci
        << "): check kernels and truncation";
    throw Error(msg.str());
}

double kl_cells(Matrix const& f, Matrix const& predicted)
{
    double kl = 0.0;
    for (std::size_t r = 0; r < f.rows(); ++r)
        for (std::size_t c = 0; c < f.cols(); ++c)
        {
            double const fv = f(r, c);
            if (fv <= 0.0)
                continue;
            double const pv = predicted(r, c);
            if (!(pv > 0.0))
                throw_zero_prediction(r, c);
            kl += fv * std::log(fv / pv);
        }
    return kl;
}

void check_shapes(Matrix const& rho, JointDistribution const& f, DetectionKernel const& signal,
                  DetectionKernel const& idler)
{
    if (rho.rows() != signal.photon_cutoff() + 1 || rho.cols() != idler.photon_cutoff() + 1)
        throw Error("dimension mismatch: EM iterate does not match the kernels' photon range");
    if (f.rows() != signal.count_cutoff() + 1 || f.cols() != idler.count_cutoff() + 1)
        throw Error("dimension mismatch: histogram does not match the kernels' count range");
}

// Entries this small carry no mass but drift into subnormal range, where
// every multiply costs ~10x.
constexpr double kFlushFloor = 1e-250;

/// In-place update rho <- rho * (K_S^T (f / prediction) K_I), renormalized.
void advance(EMState& state, JointDistribution const& f, DetectionKernel const& signal,
             DetectionKernel const& idler)
{
    Matrix const& ks = signal.values();
    Matrix const& ki = idler.values();
    std::size_t const cs_dim = ks.rows(), ns_dim = ks.cols();
    std::size_t const ci_dim = ki.rows(), ni_dim = ki.cols();

    Matrix ratio(cs_dim, ci_dim);
    for (std::size_t cs = 0; cs < cs_dim; ++cs)
        for (std::size_t ci = 0; ci < ci_dim; ++ci)
        {
            double const fv = f(cs, ci);
            if (fv <= 0.0)
                continue;
            double const pv = state.prediction(cs, ci);
            if (!(pv > 0.0))
                throw_zero_prediction(cs, ci);
            ratio(cs, ci) = fv / pv;
        }

    // back[n_S][c_I] = sum_cS K_S[c_S][n_S] ratio[c_S][c_I]
    Matrix back(ns_dim, ci_dim);
    for (std::size_t cs = 0; cs < cs_dim; ++cs)
    {
        auto const rrow = ratio.row(cs);
        for (std::size_t ns = 0; ns < ns_dim; ++ns)
        {
            double const k = ks(cs, ns);
            if (k == 0.0)
                continue;
            auto brow = back.row(ns);
            for (std::size_t ci = 0; ci < ci_dim; ++ci)
                brow[ci] += k * rrow[ci];
        }
    }

    // factor[n_S][n_I] = sum_cI back[n_S][c_I] K_I[c_I][n_I]
    Matrix rho = state.current.values();
    std::vector<double> factor(ni_dim);
    double total = 0.0;
    for (std::size_t ns = 0; ns < ns_dim; ++ns)
    {
        std::fill(factor.begin(), factor.end(), 0.0);
        auto const brow = back.row(ns);
        for (std::size_t ci = 0; ci < ci_dim; ++ci)
        {
            double const b = brow[ci];
            if (b == 0.0)
                continue;
            auto const krow = ki.row(ci);
            for (std::size_t ni = 0; ni < ni_dim; ++ni)
                factor[ni] += b * krow[ni];
        }
        auto rrow = rho.row(ns);
        for (std::size_t ni = 0; ni < ni_dim; ++ni)
        {
            rrow[ni] *= factor[ni];
            total += rrow[ni];
        }
    }
    if (!(total > 0.0))
        throw Error("EM update collapsed to zero mass");
    for (double& v : rho.data())
    {
        v /= total;
        if (v < kFlushFloor)
            v = 0.0;
    }

    state.prediction = predict_counts(rho, signal, idler);
    state.current = JointDistribution(std::move(rho));
    state.kl_history.push_back(kl_cells(f.values(), state.prediction));
    ++state.iteration;
}

} // namespace

double kl_divergence(JointDistribution const& f, JointDistribution const& predicted)
{
    std::size_t const rows = std::max(f.rows(), predicted.rows());
    std::size_t const cols = std::max(f.cols(), predicted.cols());
    return kl_cells(f.resized(rows, cols).values(), predicted.resized(rows, cols).values());
}

Matrix predict_counts(Matrix const& rho, DetectionKernel const& signal, DetectionKernel const& idler)
{
    Matrix const& ks = signal.values();
    Matrix const& ki = idler.values();
    std::size_t const cs_dim = ks.rows(), ns_dim = ks.cols();
    std::size_t const ci_dim = ki.rows(), ni_dim = ki.cols();

    // Contract the signal arm first: partial[c_S][n_I] = sum_nS K_S[c_S][n_S] rho[n_S][n_I]
    Matrix partial(cs_dim, ni_dim);
    for (std::size_t cs = 0; cs < cs_dim; ++cs)
    {
        auto prow = partial.row(cs);
        for (std::size_t ns = 0; ns < ns_dim; ++ns)
        {
            double const k = ks(cs, ns);
            if (k == 0.0)
                continue;
            auto const rrow = rho.row(ns);
            for (std::size_t ni = 0; ni < ni_dim; ++ni)
                prow[ni] += k * rrow[ni];
        }
    }

    Matrix pred(cs_dim, ci_dim);
    for (std::size_t cs = 0; cs < cs_dim; ++cs)
    {
        auto const prow = partial.row(cs);
        for (std::size_t ci = 0; ci < ci_dim; ++ci)
        {
            auto const krow = ki.row(ci);
            double acc = 0.0;
            for (std::size_t ni = 0; ni < ni_dim; ++ni)
                acc += prow[ni] * krow[ni];
            pred(cs, ci) = acc;
        }
    }
    return pred;
}

EMState initial_state(JointDistribution const& initial, JointDistribution const& f,
                      DetectionKernel const& signal, DetectionKernel const& idler)
{
    auto const rho = normalize(initial);
    check_shapes(rho.values(), f, signal, idler);
    EMState state{rho, predict_counts(rho.values(), signal, idler), 0, {}, false, StopReason::none};
    state.kl_history.push_back(kl_cells(f.values(), state.prediction));
    return state;
}

EMState em_step(EMState const& state, JointDistribution const& f, DetectionKernel const& signal,
                DetectionKernel const& idler)
{
    check_shapes(state.current.values(), f, signal, idler);
    EMState next = state;
    advance(next, f, signal, idler);
    return next;
}

EMState reconstruct(JointDistribution const& f, DetectionKernel const& signal,
                    DetectionKernel const& idler, EMConfig const& config,
                    EMObserver const& observer)
{
    config.check();
    std::size_t const ns_dim = signal.photon_cutoff() + 1;
    std::size_t const ni_dim = idler.photon_cutoff() + 1;

    JointDistribution start = [&] {
        switch (config.initial)
        {
        case InitialGuess::measured_copy: return f.resized(ns_dim, ni_dim);
        case InitialGuess::custom: return *config.custom_initial;
        case InitialGuess::uniform: break;
        }
        return JointDistribution(Matrix(ns_dim, ni_dim, 1.0));
    }();

    EMState state = initial_state(start, f, signal, idler);
    check_shapes(state.current.values(), f, signal, idler);
    while (true)
    {
        advance(state, f, signal, idler);
        if (observer && !observer(state))
        {
            state.stop_reason = StopReason::none;
            break;
        }
        double const kl = state.kl_history.back();
        double const prev = state.kl_history[state.kl_history.size() - 2];
        if (kl > prev + kKlMonotoneSlack)
        {
            state.stop_reason = StopReason::stagnation;
            break;
        }
        if (std::abs(kl - prev) < config.kl_delta_tol || kl < config.kl_delta_tol)
        {
            state.stop_reason = StopReason::kl_delta;
            state.converged = true;
            break;
        }
        if (state.iteration >= config.max_iterations)
        {
            state.stop_reason = StopReason::max_iter;
            break;
        }
    }
    return state;
}

EMState reconstruct(JointDistribution const& f, DetectionChannel const& signal,
                    DetectionChannel const& idler, EMConfig const& config,
                    TruncationPolicy const& policy, EMObserver const& observer)
{
    TruncationPolicy signal_policy = policy;
    TruncationPolicy idler_policy = policy;
    signal_policy.count_cutoff = std::max(policy.count_cutoff, f.n_s_max());
    idler_policy.count_cutoff = std::max(policy.count_cutoff, f.n_i_max());
    auto const ks = build_kernel(signal, signal_policy);
    auto const ki = build_kernel(idler, idler_policy);
    auto const padded = f.resized(ks.count_cutoff() + 1, ki.count_cutoff() + 1);
    return reconstruct(padded, ks, ki, config, observer);
}

} // namespace twinbeam
