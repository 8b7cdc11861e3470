#include "twinbeam/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "twinbeam/forward_model.hpp"

namespace twinbeam {

namespace {

MarginalDistribution renormalized(std::vector<double> values)
{
    double total = 0.0;
    for (double v : values)
        total += v;
    for (double& v : values)
        v /= total;
    return MarginalDistribution(std::move(values));
}

} // namespace

double poisson_tail_mass(double mean, std::size_t n_max)
{
    // Walk the pmf in log space from n_max+1 until terms stop mattering.
    double tail = 0.0;
    for (std::size_t n = n_max + 1;; ++n)
    {
        double const x = static_cast<double>(n);
        double const term = std::exp(x * std::log(mean) - mean - std::lgamma(x + 1.0));
        tail += term;
        if (x > mean && term < 1e-300 + tail * 1e-17)
            break;
        if (n > n_max + 100000)
            break;
    }
    return tail;
}

MarginalDistribution poisson_marginal(double mean, std::size_t n_max, double tail_epsilon)
{
    if (!(mean > 0.0))
        throw Error("Poisson mean must be positive");
    double const tail = poisson_tail_mass(mean, n_max);
    if (tail > tail_epsilon)
    {
        std::ostringstream msg;
        msg << "cutoff too small: Poisson(" << mean << ") tail beyond n=" << n_max << " is " << tail;
        throw Error(msg.str());
    }
    return renormalized(poisson_pmf_table(mean, n_max));
}

MarginalDistribution thermal_marginal(double mean, std::size_t n_max)
{
    if (!(mean > 0.0))
        throw Error("thermal mean must be positive");
    double const x = mean / (1.0 + mean);
    std::vector<double> values(n_max + 1);
    double term = 1.0 / (1.0 + mean);
    for (auto& v : values)
    {
        v = term;
        term *= x;
    }
    return renormalized(std::move(values));
}

MarginalDistribution fock_marginal(std::size_t n_fock, std::size_t n_max)
{
    if (n_fock > n_max)
        throw Error("Fock number exceeds the truncation");
    std::vector<double> values(n_max + 1, 0.0);
    values[n_fock] = 1.0;
    return MarginalDistribution(std::move(values));
}

JointDistribution ideal_pair_distribution(double mu, std::size_t n_max, double tail_epsilon)
{
    auto const m = poisson_marginal(mu, n_max, tail_epsilon);
    Matrix p(n_max + 1, n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n)
        p(n, n) = m[n];
    return JointDistribution(std::move(p));
}

JointDistribution product_distribution(MarginalDistribution const& signal,
                                       MarginalDistribution const& idler)
{
    Matrix p(signal.size(), idler.size());
    for (std::size_t s = 0; s < signal.size(); ++s)
        for (std::size_t i = 0; i < idler.size(); ++i)
            p(s, i) = signal[s] * idler[i];
    return JointDistribution(std::move(p));
}

FrameSampler::FrameSampler(JointDistribution const& source, DetectionChannel signal,
                           DetectionChannel idler, std::uint64_t seed, std::uint64_t stream_index)
    : cols_(source.cols()), signal_(signal), idler_(idler)
{
    cumulative_.reserve(source.rows() * source.cols());
    double running = 0.0;
    for (double v : source.values().data())
    {
        if (v < 0.0)
            throw Error("cannot sample from a distribution with negative entries");
        running += v;
        cumulative_.push_back(running);
    }
    if (!(running > 0.0))
        throw Error("cannot sample from a distribution with no mass");

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_index),
                      static_cast<std::uint32_t>(stream_index >> 32)};
    engine_.seed(seq);
}

std::uint32_t FrameSampler::thin(std::uint32_t photons, double efficiency)
{
    if (efficiency >= 1.0)
        return photons;
    if (efficiency <= 0.0 || photons == 0)
        return 0;
    if (photons > 64)
        return static_cast<std::uint32_t>(
            std::binomial_distribution<std::uint32_t>(photons, efficiency)(engine_));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::uint32_t detected = 0;
    for (std::uint32_t k = 0; k < photons; ++k)
        detected += uniform(engine_) < efficiency ? 1u : 0u;
    return detected;
}

std::uint32_t FrameSampler::noise(double mean)
{
    if (mean <= 0.0)
        return 0;
    return static_cast<std::uint32_t>(std::poisson_distribution<std::uint32_t>(mean)(engine_));
}

FrameSample FrameSampler::next()
{
    double const total = cumulative_.back();
    double const u = std::uniform_real_distribution<double>(0.0, total)(engine_);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end())
        --it;
    // Zero-probability cells share their predecessor's cumulative value and
    // are never selected by upper_bound.
    auto const flat = static_cast<std::size_t>(it - cumulative_.begin());
    auto const n_s = static_cast<std::uint32_t>(flat / cols_);
    auto const n_i = static_cast<std::uint32_t>(flat % cols_);

    FrameSample frame;
    frame.c_s = thin(n_s, signal_.effective_efficiency()) + noise(signal_.noise_mean());
    frame.c_i = thin(n_i, idler_.effective_efficiency()) + noise(idler_.noise_mean());
    return frame;
}

namespace {

struct StreamTally
{
    std::vector<std::vector<std::uint64_t>> counts; // [c_s][c_i]
    std::vector<FrameSample> frames;

    void add(FrameSample f)
    {
        if (counts.size() <= f.c_s)
            counts.resize(f.c_s + 1);
        auto& row = counts[f.c_s];
        if (row.size() <= f.c_i)
            row.resize(f.c_i + 1, 0);
        ++row[f.c_i];
    }
};

} // namespace

SampleResult sample_frames(JointDistribution const& source, DetectionChannel const& signal,
                           DetectionChannel const& idler, std::size_t n_frames,
                           std::uint64_t seed, SamplingOptions const& options)
{
    if (n_frames == 0)
        throw Error("n_frames must be at least 1");
    std::size_t const per_stream = std::max<std::size_t>(1, options.frames_per_stream);
    std::size_t const n_streams = (n_frames + per_stream - 1) / per_stream;
    std::vector<StreamTally> tallies(n_streams);

    auto run_stream = [&](std::size_t k) {
        FrameSampler sampler(source, signal, idler, seed, k);
        std::size_t const begin = k * per_stream;
        std::size_t const end = std::min(n_frames, begin + per_stream);
        auto& tally = tallies[k];
        if (options.keep_frames)
            tally.frames.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i)
        {
            auto const f = sampler.next();
            tally.add(f);
            if (options.keep_frames)
                tally.frames.push_back(f);
        }
    };

    unsigned const threads = std::max(1u, std::min<unsigned>(options.threads,
                                                             static_cast<unsigned>(n_streams)));
    if (threads == 1)
    {
        for (std::size_t k = 0; k < n_streams; ++k)
            run_stream(k);
    }
    else
    {
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < threads; ++t)
            workers.emplace_back([&, t] {
                for (std::size_t k = t; k < n_streams; k += threads)
                    run_stream(k);
            });
    }

    // Integer merge in stream order: independent of thread scheduling.
    std::size_t rows = 1, cols = 1;
    for (auto const& t : tallies)
    {
        rows = std::max(rows, t.counts.size());
        for (auto const& r : t.counts)
            cols = std::max(cols, r.size());
    }
    std::vector<std::uint64_t> merged(rows * cols, 0);
    for (auto const& t : tallies)
        for (std::size_t r = 0; r < t.counts.size(); ++r)
            for (std::size_t c = 0; c < t.counts[r].size(); ++c)
                merged[r * cols + c] += t.counts[r][c];

    SampleResult result{JointDistribution(Matrix(rows, cols)), {}, 0.0, 0.0};
    Matrix hist(rows, cols);
    double sum_s = 0.0, sum_i = 0.0;
    double const denom = static_cast<double>(n_frames);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
        {
            auto const n = static_cast<double>(merged[r * cols + c]);
            hist(r, c) = n / denom;
            sum_s += n * static_cast<double>(r);
            sum_i += n * static_cast<double>(c);
        }
    result.histogram = JointDistribution(std::move(hist));
    result.mean_c_s = sum_s / denom;
    result.mean_c_i = sum_i / denom;
    if (options.keep_frames)
    {
        result.frames.reserve(n_frames);
        for (auto& t : tallies)
            result.frames.insert(result.frames.end(), t.frames.begin(), t.frames.end());
    }
    return result;
}

} // namespace twinbeam
