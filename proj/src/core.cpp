#include "twinbeam/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace twinbeam {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    if (data_.size() != rows * cols)
        throw Error("matrix data size does not match its shape");
}

Matrix Matrix::from_rows(std::vector<std::vector<double>> const& rows)
{
    if (rows.empty())
        return {};
    std::size_t const cols = rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        if (rows[r].size() != cols)
            throw Error("ragged rows: row " + std::to_string(r) + " has " +
                        std::to_string(rows[r].size()) + " entries, expected " +
                        std::to_string(cols));
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

double Matrix::sum() const
{
    return std::accumulate(data_.begin(), data_.end(), 0.0);
}

JointDistribution::JointDistribution(Matrix values) : values_(std::move(values))
{
    if (values_.rows() == 0 || values_.cols() == 0)
        throw Error("joint distribution must be at least 1x1");
    for (double v : values_.data())
        if (!std::isfinite(v))
            throw Error("joint distribution has a non-finite entry");
}

JointDistribution JointDistribution::resized(std::size_t rows, std::size_t cols) const
{
    Matrix out(rows, cols);
    std::size_t const r_end = std::min(rows, this->rows());
    std::size_t const c_end = std::min(cols, this->cols());
    for (std::size_t r = 0; r < r_end; ++r)
        for (std::size_t c = 0; c < c_end; ++c)
            out(r, c) = values_(r, c);
    return JointDistribution(std::move(out));
}

JointDistribution JointDistribution::transposed() const
{
    Matrix out(cols(), rows());
    for (std::size_t r = 0; r < rows(); ++r)
        for (std::size_t c = 0; c < cols(); ++c)
            out(c, r) = values_(r, c);
    return JointDistribution(std::move(out));
}

MarginalDistribution::MarginalDistribution(std::vector<double> values) : values_(std::move(values))
{
    if (values_.empty())
        throw Error("marginal distribution must not be empty");
}

double MarginalDistribution::total() const
{
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double MarginalDistribution::mean() const
{
    double m = 0.0;
    for (std::size_t n = 0; n < values_.size(); ++n)
        m += static_cast<double>(n) * values_[n];
    return m;
}

double MarginalDistribution::second_moment() const
{
    double m = 0.0;
    for (std::size_t n = 0; n < values_.size(); ++n)
        m += static_cast<double>(n) * static_cast<double>(n) * values_[n];
    return m;
}

double MarginalDistribution::variance() const
{
    // Two-pass form; the raw-moment difference cancels badly for narrow
    // distributions far from zero.
    double const mu = mean() / total();
    double v = 0.0;
    for (std::size_t n = 0; n < values_.size(); ++n)
    {
        double const d = static_cast<double>(n) - mu;
        v += d * d * values_[n];
    }
    return v / total();
}

DetectionChannel::DetectionChannel(double effective_efficiency, double noise_mean)
    : efficiency_(effective_efficiency), noise_(noise_mean)
{
    if (!(effective_efficiency >= 0.0 && effective_efficiency <= 1.0))
        throw Error("detection channel: effective efficiency must lie in [0, 1]");
    if (!(noise_mean >= 0.0) || !std::isfinite(noise_mean))
        throw Error("detection channel: noise mean must be finite and >= 0");
}

void TruncationPolicy::check() const
{
    if (!(tail_epsilon > 0.0 && tail_epsilon <= 1e-3))
        throw Error("truncation policy: tail_epsilon must lie in (0, 1e-3]");
}

ValidationReport validate(JointDistribution const& d, double tolerance)
{
    ValidationReport report;
    for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c)
            if (d(r, c) < 0.0)
            {
                std::ostringstream msg;
                msg << "negative entry at (" << r << "," << c << ")";
                report.violations.push_back(msg.str());
            }
    double const total = d.total();
    if (std::abs(total - 1.0) > tolerance)
    {
        std::ostringstream msg;
        msg.precision(12);
        msg << "sum = " << total;
        report.violations.push_back(msg.str());
    }
    return report;
}

JointDistribution normalize(JointDistribution const& d)
{
    for (double v : d.values().data())
        if (v < 0.0)
            throw Error("cannot normalize a distribution with negative entries");
    double const total = d.total();
    if (!(total > 0.0))
        throw Error("degenerate distribution: no positive mass to normalize");
    Matrix out = d.values();
    for (double& v : out.data())
        v /= total;
    return JointDistribution(std::move(out));
}

std::pair<MarginalDistribution, MarginalDistribution> marginals(JointDistribution const& d)
{
    std::vector<double> signal(d.rows(), 0.0);
    std::vector<double> idler(d.cols(), 0.0);
    for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c)
        {
            signal[r] += d(r, c);
            idler[c] += d(r, c);
        }
    return {MarginalDistribution(std::move(signal)), MarginalDistribution(std::move(idler))};
}

double total_variation(JointDistribution const& a, JointDistribution const& b)
{
    std::size_t const rows = std::max(a.rows(), b.rows());
    std::size_t const cols = std::max(a.cols(), b.cols());
    auto at = [](JointDistribution const& d, std::size_t r, std::size_t c) {
        return (r < d.rows() && c < d.cols()) ? d(r, c) : 0.0;
    };
    double l1 = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            l1 += std::abs(at(a, r, c) - at(b, r, c));
    return 0.5 * l1;
}

} // namespace twinbeam
