#include "twinbeam/statistics.hpp"

#include <algorithm>
#include <cmath>

namespace twinbeam {

namespace {

double log_bound_factor(std::size_t n)
{
    if (n == 0)
        return 0.0;
    double const x = static_cast<double>(n);
    return x * std::log(x) - std::lgamma(x + 1.0) - x;
}

} // namespace

double covariance_cp(JointDistribution const& d)
{
    auto const [ms, mi] = marginals(d);
    double const total = d.total();
    double const mean_s = ms.mean() / total;
    double const mean_i = mi.mean() / total;
    double const var_s = ms.variance();
    double const var_i = mi.variance();
    if (!(var_s > 0.0) || !(var_i > 0.0))
        throw Error("degenerate marginal: photon-number variance is zero");

    double cov = 0.0;
    for (std::size_t s = 0; s < d.rows(); ++s)
        for (std::size_t i = 0; i < d.cols(); ++i)
            cov += (static_cast<double>(s) - mean_s) * (static_cast<double>(i) - mean_i) * d(s, i);
    cov /= total;
    return std::clamp(cov / std::sqrt(var_s * var_i), -1.0, 1.0);
}

double k_coefficient(MarginalDistribution const& m)
{
    double const total = m.total();
    double const mean = m.mean() / total;
    if (!(mean > 0.0))
        throw Error("zero mean: K coefficient undefined for the vacuum");
    double const second = m.second_moment() / total;
    return second / (mean * mean) - 1.0 / mean;
}

double classicality_bound(std::size_t n_s, std::size_t n_i)
{
    return std::exp(log_bound_factor(n_s) + log_bound_factor(n_i));
}

StatisticsReport compute_statistics(JointDistribution const& d)
{
    auto const [ms, mi] = marginals(d);
    StatisticsReport report;
    report.mean_s = ms.mean() / ms.total();
    report.mean_i = mi.mean() / mi.total();
    report.var_s = ms.variance();
    report.var_i = mi.variance();
    if (report.var_s > 0.0 && report.var_i > 0.0)
        report.covariance_cp = covariance_cp(d);
    if (report.mean_s > 0.0)
        report.k_s = k_coefficient(ms);
    if (report.mean_i > 0.0)
        report.k_i = k_coefficient(mi);
    return report;
}

NonclassicalityMap::NonclassicalityMap(Matrix margin) : margin_(std::move(margin)) {}

std::size_t NonclassicalityMap::violation_count() const
{
    return static_cast<std::size_t>(
        std::count_if(margin_.data().begin(), margin_.data().end(), [](double m) { return m > 0.0; }));
}

std::vector<std::pair<std::size_t, std::size_t>> NonclassicalityMap::violating_cells() const
{
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t s = 0; s < margin_.rows(); ++s)
        for (std::size_t i = 0; i < margin_.cols(); ++i)
            if (violated(s, i))
                cells.emplace_back(s, i);
    return cells;
}

std::size_t NonclassicalityMap::max_diagonal_offset() const
{
    std::size_t offset = 0;
    for (auto [s, i] : violating_cells())
        offset = std::max(offset, s > i ? s - i : i - s);
    return offset;
}

NonclassicalityMap nonclassicality_map(JointDistribution const& d)
{
    std::vector<double> factor(std::max(d.rows(), d.cols()));
    for (std::size_t n = 0; n < factor.size(); ++n)
        factor[n] = log_bound_factor(n);

    Matrix margin(d.rows(), d.cols());
    for (std::size_t s = 0; s < d.rows(); ++s)
        for (std::size_t i = 0; i < d.cols(); ++i)
            margin(s, i) = d(s, i) - std::exp(factor[s] + factor[i]);
    return NonclassicalityMap(std::move(margin));
}

} // namespace twinbeam
