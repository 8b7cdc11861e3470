#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twinbeam/core.hpp"
#include "twinbeam/quasi.hpp"
#include "twinbeam/reconstruction.hpp"

namespace twinbeam {

/// Amplitude grid |alpha| in [alpha_min, alpha_max], `points` per axis.
struct GridSpec
{
    double alpha_min = 0.05;
    double alpha_max = 8.0;
    std::size_t points = 160;

    std::vector<double> axis() const { return linear_axis(alpha_min, alpha_max, points); }
};

/// Everything one pipeline run needs. Defaults are the reference detection
/// parameters (T_S eta = 0.0539, T_I eta = 0.0415, D = 0.75) and the ideal
/// mu = 14.5 source with s = 0.3, M = 50.
struct PipelineConfig
{
    double signal_eff = 0.0539;
    double idler_eff = 0.0415;
    double signal_noise = 0.75;
    double idler_noise = 0.75;
    double mu = 14.5;
    std::optional<std::filesystem::path> source_path;
    TruncationPolicy policy;
    EMConfig em;
    OrderingParams ordering;
    GammaWeight weight = GammaWeight::single;
    GridSpec grid;
    std::uint64_t seed = 20040615;
    std::size_t frames = 240000;
    unsigned threads = 1;

    DetectionChannel signal_channel() const { return {signal_eff, signal_noise}; }
    DetectionChannel idler_channel() const { return {idler_eff, idler_noise}; }

    /// Applies one `key = value` setting (keys are the long flag names
    /// without dashes, e.g. "signal-eff"). Throws Error on unknown keys or
    /// malformed values.
    void apply(std::string_view key, std::string_view value);

    /// Throws Error if any component invariant is violated.
    void check() const;
};

/// Settings keys understood by PipelineConfig::apply, in application order.
std::vector<std::string_view> const& config_keys();

/// Flat `key = value` file; '#' starts a comment. Order is preserved.
std::vector<std::pair<std::string, std::string>> read_config(std::istream& in);
std::vector<std::pair<std::string, std::string>> read_config(std::filesystem::path const& path);

} // namespace twinbeam
