#include "twinbeam/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "twinbeam/io.hpp"

namespace twinbeam {

namespace {

std::string_view trim(std::string_view s)
{
    auto const first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    auto const last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view value)
{
    double v = 0.0;
    auto const [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(v))
        throw Error("invalid value '" + std::string(value) + "' for " + std::string(key));
    return v;
}

std::uint64_t to_unsigned(std::string_view key, std::string_view value)
{
    std::uint64_t v = 0;
    auto const [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw Error("invalid value '" + std::string(value) + "' for " + std::string(key) +
                    " (expected a non-negative integer)");
    return v;
}

} // namespace

std::vector<std::string_view> const& config_keys()
{
    // noise-mean precedes the per-arm keys so that they override it.
    static std::vector<std::string_view> const keys{
        "signal-eff",  "idler-eff",     "noise-mean",   "signal-noise", "idler-noise",
        "mu",          "source",        "frames",       "seed",         "threads",
        "s",           "modes",         "variant",      "photon-cutoff", "count-cutoff",
        "tail-epsilon", "max-iter",     "kl-tol",       "initial",      "alpha-min",
        "alpha-max",   "grid-points",
    };
    return keys;
}

void PipelineConfig::apply(std::string_view key, std::string_view value)
{
    if (key == "signal-eff")
        signal_eff = to_double(key, value);
    else if (key == "idler-eff")
        idler_eff = to_double(key, value);
    else if (key == "noise-mean")
        signal_noise = idler_noise = to_double(key, value);
    else if (key == "signal-noise")
        signal_noise = to_double(key, value);
    else if (key == "idler-noise")
        idler_noise = to_double(key, value);
    else if (key == "mu")
        mu = to_double(key, value);
    else if (key == "source")
        source_path = std::filesystem::path(std::string(value));
    else if (key == "frames")
        frames = to_unsigned(key, value);
    else if (key == "seed")
        seed = to_unsigned(key, value);
    else if (key == "threads")
        threads = static_cast<unsigned>(to_unsigned(key, value));
    else if (key == "s")
        ordering.s = to_double(key, value);
    else if (key == "modes")
        ordering.m_modes = to_unsigned(key, value);
    else if (key == "variant")
    {
        if (value == "single")
            weight = GammaWeight::single;
        else if (value == "squared")
            weight = GammaWeight::squared;
        else
            throw Error("variant must be 'single' or 'squared', got '" + std::string(value) + "'");
    }
    else if (key == "photon-cutoff")
        policy.photon_cutoff = to_unsigned(key, value);
    else if (key == "count-cutoff")
        policy.count_cutoff = to_unsigned(key, value);
    else if (key == "tail-epsilon")
        policy.tail_epsilon = to_double(key, value);
    else if (key == "max-iter")
        em.max_iterations = to_unsigned(key, value);
    else if (key == "kl-tol")
        em.kl_delta_tol = to_double(key, value);
    else if (key == "initial")
    {
        if (value == "uniform")
            em.initial = InitialGuess::uniform;
        else if (value == "measured-copy")
            em.initial = InitialGuess::measured_copy;
        else
            throw Error("initial must be 'uniform' or 'measured-copy', got '" + std::string(value) + "'");
    }
    else if (key == "alpha-min")
        grid.alpha_min = to_double(key, value);
    else if (key == "alpha-max")
        grid.alpha_max = to_double(key, value);
    else if (key == "grid-points")
        grid.points = to_unsigned(key, value);
    else
        throw Error("unknown setting '" + std::string(key) + "'");
}

void PipelineConfig::check() const
{
    (void)signal_channel();
    (void)idler_channel();
    if (!(mu > 0.0))
        throw Error("mu must be > 0");
    if (frames < 1)
        throw Error("frames must be >= 1");
    policy.check();
    em.check();
    ordering.check();
    if (!(grid.alpha_min > 0.0) || !(grid.alpha_max > grid.alpha_min) || grid.points < 2)
        throw Error("grid: need 0 < alpha-min < alpha-max and at least 2 points");
    if (source_path && !std::filesystem::exists(*source_path))
        throw Error("source file '" + source_path->string() + "' does not exist");
}

std::vector<std::pair<std::string, std::string>> read_config(std::istream& in)
{
    std::vector<std::pair<std::string, std::string>> settings;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        std::string_view view = line;
        if (auto const hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = trim(view);
        if (view.empty())
            continue;
        auto const eq = view.find('=');
        if (eq == std::string_view::npos)
            throw io::ParseError("expected 'key = value'", line_no);
        auto const key = trim(view.substr(0, eq));
        auto const value = trim(view.substr(eq + 1));
        if (key.empty() || value.empty())
            throw io::ParseError("expected 'key = value'", line_no);
        settings.emplace_back(std::string(key), std::string(value));
    }
    return settings;
}

std::vector<std::pair<std::string, std::string>> read_config(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config file '" + path.string() + "'");
    return read_config(in);
}

} // namespace twinbeam
