#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twinbeam {

/// Raised when an operation's contract is violated (bad input, degenerate data).
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Normalization tolerance for exactly-constructed distributions.
inline constexpr double kNormTolerance = 1e-9;

/// Dense row-major matrix of doubles. Shared storage for distributions,
/// kernels and grids.
class Matrix
{
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix from_rows(std::vector<std::vector<double>> const& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<double const> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    std::span<double const> data() const { return data_; }
    std::span<double> data() { return data_; }

    double sum() const;

    friend bool operator==(Matrix const&, Matrix const&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Joint photon-number (or count) distribution indexed [signal][idler].
///
/// The same type holds a source distribution p(n_S, n_I), a measured count
/// histogram f(c_S, c_I), and an EM iterate. Construction only requires a
/// non-empty matrix of finite values; use validate() for the probability
/// invariants so that malformed data can still be inspected and reported.
class JointDistribution
{
  public:
    explicit JointDistribution(Matrix values);

    static JointDistribution from_rows(std::vector<std::vector<double>> const& rows)
    {
        return JointDistribution(Matrix::from_rows(rows));
    }

    std::size_t rows() const { return values_.rows(); }
    std::size_t cols() const { return values_.cols(); }
    std::size_t n_s_max() const { return values_.rows() - 1; }
    std::size_t n_i_max() const { return values_.cols() - 1; }

    double operator()(std::size_t n_s, std::size_t n_i) const { return values_(n_s, n_i); }
    Matrix const& values() const { return values_; }
    double total() const { return values_.sum(); }

    /// Zero-padded (or cropped) copy with the given shape.
    JointDistribution resized(std::size_t rows, std::size_t cols) const;

    /// Arms exchanged: result(n_I, n_S) = this(n_S, n_I).
    JointDistribution transposed() const;

    friend bool operator==(JointDistribution const&, JointDistribution const&) = default;

  private:
    Matrix values_;
};

/// One-arm photon-number distribution over n in [0, N_max].
class MarginalDistribution
{
  public:
    explicit MarginalDistribution(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t n) const { return values_[n]; }
    std::span<double const> values() const { return values_; }

    double total() const;
    double mean() const;
    /// E[n^2]
    double second_moment() const;
    double variance() const;

  private:
    std::vector<double> values_;
};

/// Per-arm detection parameters: effective efficiency T*eta and mean noise
/// counts D per frame.
class DetectionChannel
{
  public:
    DetectionChannel(double effective_efficiency, double noise_mean);

    double effective_efficiency() const { return efficiency_; }
    double noise_mean() const { return noise_; }

    friend bool operator==(DetectionChannel const&, DetectionChannel const&) = default;

  private:
    double efficiency_;
    double noise_;
};

/// Finite truncation of the otherwise infinite photon/count sums.
struct TruncationPolicy
{
    std::size_t photon_cutoff = 60;
    std::size_t count_cutoff = 20;
    double tail_epsilon = 1e-9;

    /// Throws Error unless tail_epsilon lies in (0, 1e-3].
    void check() const;
};

struct ValidationReport
{
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

ValidationReport validate(JointDistribution const& d, double tolerance = kNormTolerance);

/// Divides by the total mass. Throws on negative entries or an all-zero input.
JointDistribution normalize(JointDistribution const& d);

std::pair<MarginalDistribution, MarginalDistribution> marginals(JointDistribution const& d);

/// Total-variation distance (half L1), with the smaller operand zero-padded.
double total_variation(JointDistribution const& a, JointDistribution const& b);

} // namespace twinbeam
