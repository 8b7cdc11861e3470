#include "twinbeam/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace twinbeam {

std::vector<double> poisson_pmf_table(double mean, std::size_t k_max)
{
    std::vector<double> pmf(k_max + 1);
    pmf[0] = std::exp(-mean);
    for (std::size_t k = 1; k <= k_max; ++k)
        pmf[k] = pmf[k - 1] * mean / static_cast<double>(k);
    return pmf;
}

std::vector<double> binomial_pmf_row(std::size_t n, double p)
{
    // C(n, l) built up to n/2 and mirrored, so both ends are exactly 1.
    std::vector<double> coeff(n + 1);
    double c = 1.0;
    for (std::size_t l = 0; 2 * l <= n; ++l)
    {
        coeff[l] = coeff[n - l] = c;
        c = c * static_cast<double>(n - l) / static_cast<double>(l + 1);
    }
    std::vector<double> row(n + 1);
    for (std::size_t l = 0; l <= n; ++l)
        row[l] = coeff[l] * std::pow(p, static_cast<double>(l)) *
                 std::pow(1.0 - p, static_cast<double>(n - l));
    return row;
}

double kernel_entry(DetectionChannel const& channel, std::size_t c, std::size_t n)
{
    auto const thinning = binomial_pmf_row(n, channel.effective_efficiency());
    auto const noise = poisson_pmf_table(channel.noise_mean(), c);
    double value = 0.0;
    for (std::size_t l = 0; l <= std::min(c, n); ++l)
        value += thinning[l] * noise[c - l];
    return value;
}

DetectionKernel::DetectionKernel(Matrix values, DetectionChannel channel)
    : values_(std::move(values)), channel_(channel)
{
    if (values_.empty())
        throw Error("detection kernel must not be empty");
}

double DetectionKernel::column_sum(std::size_t n) const
{
    double s = 0.0;
    for (std::size_t c = 0; c < values_.rows(); ++c)
        s += values_(c, n);
    return s;
}

DetectionKernel build_kernel(DetectionChannel const& channel, TruncationPolicy const& policy)
{
    policy.check();
    std::size_t const c_max = policy.count_cutoff;
    std::size_t const n_max = policy.photon_cutoff;
    auto const noise = poisson_pmf_table(channel.noise_mean(), c_max);

    Matrix values(c_max + 1, n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n)
    {
        auto const thinning = binomial_pmf_row(n, channel.effective_efficiency());
        for (std::size_t c = 0; c <= c_max; ++c)
        {
            double v = 0.0;
            for (std::size_t l = 0; l <= std::min(c, n); ++l)
                v += thinning[l] * noise[c - l];
            values(c, n) = v;
        }
    }

    DetectionKernel kernel(std::move(values), channel);
    for (std::size_t n = 0; n <= n_max; ++n)
    {
        double const s = kernel.column_sum(n);
        if (s < 1.0 - policy.tail_epsilon)
        {
            std::ostringstream msg;
            msg.precision(6);
            msg << "count cutoff too small: column n=" << n << " retains " << s
                << " of its mass at C_max=" << c_max;
            throw Error(msg.str());
        }
    }
    return kernel;
}

ForwardResult forward(JointDistribution const& p, DetectionKernel const& signal,
                      DetectionKernel const& idler)
{
    if (signal.photon_cutoff() < p.n_s_max() || idler.photon_cutoff() < p.n_i_max())
    {
        std::ostringstream msg;
        msg << "dimension mismatch: distribution is " << p.rows() << "x" << p.cols()
            << " but kernels cover " << signal.photon_cutoff() + 1 << "x"
            << idler.photon_cutoff() + 1 << " photon numbers";
        throw Error(msg.str());
    }

    std::size_t const cs_dim = signal.count_cutoff() + 1;
    std::size_t const ci_dim = idler.count_cutoff() + 1;
    Matrix f(cs_dim, ci_dim);
    // Summation order per cell is fixed: n_S, then n_I innermost. Zero source
    // cells contribute +0.0 and are skipped without changing the result.
    for (std::size_t cs = 0; cs < cs_dim; ++cs)
        for (std::size_t ci = 0; ci < ci_dim; ++ci)
        {
            double acc = 0.0;
            for (std::size_t ns = 0; ns < p.rows(); ++ns)
            {
                double const ks = signal(cs, ns);
                for (std::size_t ni = 0; ni < p.cols(); ++ni)
                {
                    double const pv = p(ns, ni);
                    if (pv != 0.0)
                        acc += pv * ks * idler(ci, ni);
                }
            }
            f(cs, ci) = acc;
        }

    double const total = f.sum();
    double const source_total = p.total();
    if (!(total > 0.0))
        throw Error("forward image has no mass inside the count cutoff");
    for (double& v : f.data())
        v /= total;
    return {JointDistribution(std::move(f)), source_total - total};
}

} // namespace twinbeam
