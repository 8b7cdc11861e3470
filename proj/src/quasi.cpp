#include "twinbeam/quasi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace twinbeam {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRescale = 1e150;

void check_axis(std::span<double const> axis, char const* name)
{
    if (axis.empty())
        throw Error(std::string(name) + " axis is empty");
    for (std::size_t k = 0; k < axis.size(); ++k)
    {
        if (!(axis[k] > 0.0) || !std::isfinite(axis[k]))
            throw Error(std::string(name) + " axis values must be finite and > 0");
        if (k > 0 && !(axis[k] > axis[k - 1]))
            throw Error(std::string(name) + " axis must be strictly increasing");
    }
}

struct Term
{
    std::size_t n_s;
    std::size_t n_i;
    double log_weight;
    int sign;
};

/// Per-arm factor ((s+1)/(s-1))^n L_n^{M-1}(4W/(1-s^2)) in log/sign form.
SignedLogRow arm_factors(std::size_t n_max, OrderingParams const& params, double w)
{
    double const s = params.s;
    double const q = (s + 1.0) / (s - 1.0);
    SignedLogRow row;
    if (q == 0.0)
    {
        // Anti-normal ordering: only the n = 0 term survives, L_0 = 1.
        row.log_abs.assign(n_max + 1, kNegInf);
        row.sign.assign(n_max + 1, 0);
        row.log_abs[0] = 0.0;
        row.sign[0] = 1;
        return row;
    }
    double const x = 4.0 * w / (1.0 - s * s);
    row = laguerre_row(n_max, static_cast<double>(params.m_modes) - 1.0, x);
    double const log_q = std::log(std::abs(q));
    for (std::size_t n = 1; n <= n_max; ++n)
    {
        row.log_abs[n] += static_cast<double>(n) * log_q;
        if (q < 0.0 && (n % 2 == 1))
            row.sign[n] = -row.sign[n];
    }
    return row;
}

double evaluate_cell(std::vector<Term> const& terms, SignedLogRow const& signal,
                     SignedLogRow const& idler, double log_prefactor)
{
    double max_log = kNegInf;
    for (auto const& t : terms)
    {
        if (signal.sign[t.n_s] == 0 || idler.sign[t.n_i] == 0)
            continue;
        max_log = std::max(max_log, t.log_weight + signal.log_abs[t.n_s] + idler.log_abs[t.n_i]);
    }
    if (max_log == kNegInf)
        return 0.0;

    // Kahan summation in increasing (n_S, n_I) order.
    double sum = 0.0;
    double carry = 0.0;
    for (auto const& t : terms)
    {
        int const sign = t.sign * signal.sign[t.n_s] * idler.sign[t.n_i];
        if (sign == 0)
            continue;
        double const y =
            sign * std::exp(t.log_weight + signal.log_abs[t.n_s] + idler.log_abs[t.n_i] - max_log) -
            carry;
        double const next = sum + y;
        carry = (next - sum) - y;
        sum = next;
    }
    double const scale = log_prefactor + max_log;
    double const value = sum * std::exp(scale);
    if (!std::isfinite(value) || !std::isfinite(scale))
    {
        std::ostringstream msg;
        msg << "non-finite term in the intensity series (log scale " << scale
            << "); reduce the grid range or the mode count";
        throw Error(msg.str());
    }
    return value;
}

/// Trapezoid rule over a possibly non-uniform axis.
std::vector<double> trapezoid_weights(std::span<double const> axis)
{
    std::vector<double> w(axis.size(), 0.0);
    for (std::size_t k = 0; k + 1 < axis.size(); ++k)
    {
        double const h = 0.5 * (axis[k + 1] - axis[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    return w;
}

} // namespace

void OrderingParams::check() const
{
    if (!(s >= -1.0 && s < 1.0))
        throw Error("ordering parameter s must lie in [-1, 1); s = 1 (normal ordering) is singular");
    if (m_modes < 1)
        throw Error("mode count M must be >= 1");
}

double laguerre(std::size_t degree, double order, double x)
{
    double prev = 1.0;
    if (degree == 0)
        return prev;
    double cur = 1.0 + order - x;
    for (std::size_t n = 1; n < degree; ++n)
    {
        double const k = static_cast<double>(n);
        double const next = ((2.0 * k + 1.0 + order - x) * cur - (k + order) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

SignedLogRow laguerre_row(std::size_t n_max, double order, double x)
{
    SignedLogRow row;
    row.log_abs.resize(n_max + 1);
    row.sign.resize(n_max + 1);
    auto store = [&row](std::size_t n, double v, double shift) {
        if (v == 0.0)
        {
            row.log_abs[n] = kNegInf;
            row.sign[n] = 0;
        }
        else
        {
            row.log_abs[n] = std::log(std::abs(v)) + shift;
            row.sign[n] = v > 0.0 ? 1 : -1;
        }
    };

    double shift = 0.0; // true value = scaled value * e^shift
    double prev = 1.0;
    store(0, prev, shift);
    if (n_max == 0)
        return row;
    double cur = 1.0 + order - x;
    store(1, cur, shift);
    for (std::size_t n = 1; n < n_max; ++n)
    {
        double const k = static_cast<double>(n);
        double next = ((2.0 * k + 1.0 + order - x) * cur - (k + order) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        double const mag = std::max(std::abs(prev), std::abs(cur));
        if (mag > kRescale)
        {
            prev /= kRescale;
            cur /= kRescale;
            shift += std::log(kRescale);
        }
        else if (mag > 0.0 && mag < 1.0 / kRescale)
        {
            prev *= kRescale;
            cur *= kRescale;
            shift -= std::log(kRescale);
        }
        store(n + 1, cur, shift);
    }
    return row;
}

std::vector<double> linear_axis(double lo, double hi, std::size_t points)
{
    if (points < 2 || !(hi > lo))
        throw Error("axis needs at least two points and hi > lo");
    std::vector<double> axis(points);
    double const step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k)
        axis[k] = lo + step * static_cast<double>(k);
    axis.back() = hi;
    return axis;
}

IntensityGrid intensity_distribution(JointDistribution const& rho, OrderingParams const& params,
                                     std::span<double const> w_s_axis,
                                     std::span<double const> w_i_axis, GammaWeight weight)
{
    params.check();
    check_axis(w_s_axis, "W_S");
    check_axis(w_i_axis, "W_I");

    double const m = static_cast<double>(params.m_modes);
    double const gamma_power = weight == GammaWeight::squared ? 2.0 : 1.0;
    std::vector<Term> terms;
    for (std::size_t ns = 0; ns < rho.rows(); ++ns)
        for (std::size_t ni = 0; ni < rho.cols(); ++ni)
        {
            double const r = rho(ns, ni);
            if (r == 0.0)
                continue;
            double const xs = static_cast<double>(ns), xi = static_cast<double>(ni);
            double const lw = std::log(std::abs(r)) + std::lgamma(xs + 1.0) + std::lgamma(xi + 1.0) -
                              gamma_power * (std::lgamma(xs + m) + std::lgamma(xi + m));
            terms.push_back({ns, ni, lw, r > 0.0 ? 1 : -1});
        }

    std::vector<SignedLogRow> signal_rows, idler_rows;
    signal_rows.reserve(w_s_axis.size());
    idler_rows.reserve(w_i_axis.size());
    for (double w : w_s_axis)
        signal_rows.push_back(arm_factors(rho.n_s_max(), params, w));
    for (double w : w_i_axis)
        idler_rows.push_back(arm_factors(rho.n_i_max(), params, w));

    double const one_minus_s = 1.0 - params.s;
    IntensityGrid grid{{w_s_axis.begin(), w_s_axis.end()},
                       {w_i_axis.begin(), w_i_axis.end()},
                       Matrix(w_s_axis.size(), w_i_axis.size())};
    for (std::size_t a = 0; a < w_s_axis.size(); ++a)
        for (std::size_t b = 0; b < w_i_axis.size(); ++b)
        {
            double const ws = w_s_axis[a], wi = w_i_axis[b];
            double const log_prefactor =
                -std::log(ws) - std::log(wi) - 2.0 * (ws + wi) / one_minus_s +
                m * std::log(4.0 * ws * wi / (one_minus_s * one_minus_s));
            grid.values(a, b) = evaluate_cell(terms, signal_rows[a], idler_rows[b], log_prefactor);
        }
    return grid;
}

QuasiGrid quasi_distribution(JointDistribution const& rho, OrderingParams const& params,
                             std::span<double const> alpha_s_axis,
                             std::span<double const> alpha_i_axis, GammaWeight weight)
{
    check_axis(alpha_s_axis, "|alpha_S|");
    check_axis(alpha_i_axis, "|alpha_I|");
    std::vector<double> ws(alpha_s_axis.size()), wi(alpha_i_axis.size());
    std::transform(alpha_s_axis.begin(), alpha_s_axis.end(), ws.begin(), [](double a) { return a * a; });
    std::transform(alpha_i_axis.begin(), alpha_i_axis.end(), wi.begin(), [](double a) { return a * a; });

    auto const intensity = intensity_distribution(rho, params, ws, wi, weight);
    constexpr double inv_pi2 = 1.0 / (std::numbers::pi * std::numbers::pi);

    QuasiGrid grid{{alpha_s_axis.begin(), alpha_s_axis.end()},
                   {alpha_i_axis.begin(), alpha_i_axis.end()},
                   intensity.values, 0.0, 0.0};
    std::size_t negative = 0;
    double min_value = std::numeric_limits<double>::infinity();
    for (double& v : grid.values.data())
    {
        v *= inv_pi2;
        min_value = std::min(min_value, v);
        negative += v < 0.0 ? 1 : 0;
    }
    grid.min_value = min_value;
    grid.negative_fraction =
        static_cast<double>(negative) / static_cast<double>(grid.values.data().size());
    return grid;
}

double integrated_mass(IntensityGrid const& grid)
{
    auto const ws = trapezoid_weights(grid.w_s_axis);
    auto const wi = trapezoid_weights(grid.w_i_axis);
    double total = 0.0;
    for (std::size_t a = 0; a < ws.size(); ++a)
        for (std::size_t b = 0; b < wi.size(); ++b)
            total += ws[a] * wi[b] * grid.values(a, b);
    return total;
}

double integrated_mass(QuasiGrid const& grid)
{
    // d^2 alpha = 2 pi |alpha| d|alpha| per arm.
    auto const ws = trapezoid_weights(grid.alpha_s_axis);
    auto const wi = trapezoid_weights(grid.alpha_i_axis);
    double const two_pi = 2.0 * std::numbers::pi;
    double total = 0.0;
    for (std::size_t a = 0; a < ws.size(); ++a)
        for (std::size_t b = 0; b < wi.size(); ++b)
            total += ws[a] * two_pi * grid.alpha_s_axis[a] * wi[b] * two_pi * grid.alpha_i_axis[b] *
                     grid.values(a, b);
    return total;
}

bool has_negativity(QuasiGrid const& grid)
{
    double max_abs = 0.0;
    for (double v : grid.values.data())
        max_abs = std::max(max_abs, std::abs(v));
    return grid.min_value < -1e-12 * max_abs;
}

NegativityScan negativity_threshold_scan(JointDistribution const& rho, std::size_t m_modes,
                                         std::span<double const> alpha_s_axis,
                                         std::span<double const> alpha_i_axis, GammaWeight weight)
{
    NegativityScan scan;
    auto probe = [&](double s) {
        auto const grid = quasi_distribution(rho, {s, m_modes}, alpha_s_axis, alpha_i_axis, weight);
        bool const negative = has_negativity(grid);
        scan.samples.push_back({s, grid.min_value, negative});
        return negative;
    };

    double lo = -1.0, hi = 0.99;
    if (!probe(hi))
        throw Error("no negativity found: quasi-distribution is nonnegative up to s = 0.99");
    if (probe(lo))
    {
        scan.s0 = lo;
        return scan;
    }
    while (hi - lo > 0.01)
    {
        double const mid = 0.5 * (lo + hi);
        (probe(mid) ? hi : lo) = mid;
    }
    scan.s0 = hi;
    return scan;
}

} // namespace twinbeam
