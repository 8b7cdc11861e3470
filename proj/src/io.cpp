#include "twinbeam/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace twinbeam::io {

namespace {

std::string located(std::string const& what, std::size_t line, std::size_t column)
{
    std::ostringstream msg;
    msg << "line " << line;
    if (column > 0)
        msg << ", column " << column;
    msg << ": " << what;
    return msg.str();
}

struct Token
{
    std::string_view text;
    std::size_t column; // 1-based
};

std::vector<Token> split(std::string_view line)
{
    std::vector<Token> tokens;
    std::size_t pos = 0;
    while (pos < line.size())
    {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
            ++pos;
        std::size_t const start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r')
            ++pos;
        if (pos > start)
            tokens.push_back({line.substr(start, pos - start), start + 1});
    }
    return tokens;
}

double parse_double(Token const& tok, std::size_t line)
{
    double v = 0.0;
    auto const* first = tok.text.data();
    auto const* last = first + tok.text.size();
    if (*first == '+')
        ++first;
    auto const [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw ParseError("invalid number '" + std::string(tok.text) + "'", line, tok.column);
    return v;
}

std::size_t parse_count(Token const& tok, std::size_t line)
{
    std::size_t v = 0;
    auto const [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
    if (ec != std::errc{} || ptr != tok.text.data() + tok.text.size())
        throw ParseError("invalid count '" + std::string(tok.text) + "'", line, tok.column);
    return v;
}

bool is_comment_or_blank(std::string_view line)
{
    auto const tokens = split(line);
    return tokens.empty() || tokens.front().text.front() == '#';
}

/// Reads the header line "# <tag> <a> <b>" (the first non-blank line).
std::pair<std::size_t, std::size_t> read_header(std::istream& in, std::string_view tag,
                                                std::size_t& line_no)
{
    std::string line;
    while (std::getline(in, line))
    {
        ++line_no;
        auto const tokens = split(line);
        if (tokens.empty())
            continue;
        if (tokens.size() != 4 || tokens[0].text != "#" || tokens[1].text != tag)
            throw ParseError("expected header '# " + std::string(tag) + " <rows> <cols>'", line_no, 1);
        return {parse_count(tokens[2], line_no), parse_count(tokens[3], line_no)};
    }
    throw ParseError("missing header '# " + std::string(tag) + " <rows> <cols>'", line_no + 1);
}

/// Next non-comment line split into exactly `expected` numbers. Returns
/// false at end of input.
bool read_values(std::istream& in, std::size_t expected, std::size_t& line_no,
                 std::vector<double>& values)
{
    std::string line;
    while (std::getline(in, line))
    {
        ++line_no;
        if (is_comment_or_blank(line))
            continue;
        auto const tokens = split(line);
        if (tokens.size() != expected)
            throw ParseError("expected " + std::to_string(expected) + " values, found " +
                                 std::to_string(tokens.size()),
                             line_no);
        values.clear();
        for (auto const& tok : tokens)
            values.push_back(parse_double(tok, line_no));
        return true;
    }
    return false;
}

std::ofstream open_out(std::filesystem::path const& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path.string() + "' for reading");
    return in;
}

void write_row(std::span<double const> values, std::ostream& out)
{
    for (std::size_t k = 0; k < values.size(); ++k)
    {
        if (k > 0)
            out << ' ';
        out << format_value(values[k]);
    }
    out << '\n';
}

std::vector<double> index_axis(std::size_t n)
{
    std::vector<double> axis(n);
    for (std::size_t k = 0; k < n; ++k)
        axis[k] = static_cast<double>(k);
    return axis;
}

} // namespace

ParseError::ParseError(std::string const& what, std::size_t line, std::size_t column)
    : Error(located(what, line, column)), line_(line), column_(column)
{
}

std::string format_value(double v)
{
    char buf[64];
    auto const [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

void write_matrix(JointDistribution const& d, std::ostream& out)
{
    out << "# joint-distribution " << d.rows() << ' ' << d.cols() << '\n';
    for (std::size_t r = 0; r < d.rows(); ++r)
        write_row(d.values().row(r), out);
}

void write_matrix(JointDistribution const& d, std::filesystem::path const& path)
{
    auto out = open_out(path);
    write_matrix(d, out);
}

JointDistribution read_matrix(std::istream& in)
{
    std::size_t line_no = 0;
    auto const [rows, cols] = read_header(in, "joint-distribution", line_no);
    if (rows == 0 || cols == 0)
        throw ParseError("matrix must be at least 1x1", line_no);
    Matrix m(rows, cols);
    std::vector<double> values;
    std::size_t found = 0;
    while (read_values(in, cols, line_no, values))
    {
        if (found == rows)
            throw ParseError("expected " + std::to_string(rows) + " rows, found more", line_no);
        std::copy(values.begin(), values.end(), m.row(found).begin());
        ++found;
    }
    if (found != rows)
        throw ParseError("expected " + std::to_string(rows) + " rows, found " + std::to_string(found),
                         line_no);
    return JointDistribution(std::move(m));
}

JointDistribution read_matrix(std::filesystem::path const& path)
{
    auto in = open_in(path);
    return read_matrix(in);
}

void write_grid(PlotGrid const& grid, std::ostream& out)
{
    out << "# grid " << grid.x_axis.size() << ' ' << grid.y_axis.size() << '\n';
    write_row(grid.x_axis, out);
    write_row(grid.y_axis, out);
    for (std::size_t r = 0; r < grid.values.rows(); ++r)
        write_row(grid.values.row(r), out);
}

void write_grid(PlotGrid const& grid, std::filesystem::path const& path)
{
    auto out = open_out(path);
    write_grid(grid, out);
}

PlotGrid read_grid(std::istream& in)
{
    std::size_t line_no = 0;
    auto const [nx, ny] = read_header(in, "grid", line_no);
    if (nx == 0 || ny == 0)
        throw ParseError("grid must be at least 1x1", line_no);
    PlotGrid grid;
    if (!read_values(in, nx, line_no, grid.x_axis))
        throw ParseError("missing x axis", line_no + 1);
    if (!read_values(in, ny, line_no, grid.y_axis))
        throw ParseError("missing y axis", line_no + 1);
    grid.values = Matrix(nx, ny);
    std::vector<double> values;
    std::size_t found = 0;
    while (read_values(in, ny, line_no, values))
    {
        if (found == nx)
            throw ParseError("expected " + std::to_string(nx) + " rows, found more", line_no);
        std::copy(values.begin(), values.end(), grid.values.row(found).begin());
        ++found;
    }
    if (found != nx)
        throw ParseError("expected " + std::to_string(nx) + " rows, found " + std::to_string(found),
                         line_no);
    return grid;
}

PlotGrid read_grid(std::filesystem::path const& path)
{
    auto in = open_in(path);
    return read_grid(in);
}

PlotGrid to_plot_grid(IntensityGrid const& grid)
{
    return {grid.w_s_axis, grid.w_i_axis, grid.values};
}

PlotGrid to_plot_grid(QuasiGrid const& grid)
{
    return {grid.alpha_s_axis, grid.alpha_i_axis, grid.values};
}

PlotGrid to_plot_grid(NonclassicalityMap const& map)
{
    return {index_axis(map.margin().rows()), index_axis(map.margin().cols()), map.margin()};
}

void write_frames(std::span<FrameSample const> frames, std::ostream& out)
{
    for (auto const& f : frames)
        out << f.c_s << ' ' << f.c_i << '\n';
}

std::vector<FrameSample> read_frames(std::istream& in)
{
    std::vector<FrameSample> frames;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (is_comment_or_blank(line))
            continue;
        auto const tokens = split(line);
        if (tokens.size() != 2)
            throw ParseError("expected 'c_S c_I', found " + std::to_string(tokens.size()) + " fields",
                             line_no);
        frames.push_back({static_cast<std::uint32_t>(parse_count(tokens[0], line_no)),
                          static_cast<std::uint32_t>(parse_count(tokens[1], line_no))});
    }
    return frames;
}

void write_kl_history(std::span<double const> kl_history, std::ostream& out)
{
    for (std::size_t k = 0; k < kl_history.size(); ++k)
        out << k << ' ' << format_value(kl_history[k]) << '\n';
}

void write_report(StatisticsReport const& report, std::ostream& out)
{
    auto opt = [](std::optional<double> const& v) { return v ? format_value(*v) : std::string("null"); };
    out << "mean_s = " << format_value(report.mean_s) << '\n'
        << "mean_i = " << format_value(report.mean_i) << '\n'
        << "var_s = " << format_value(report.var_s) << '\n'
        << "var_i = " << format_value(report.var_i) << '\n'
        << "covariance_cp = " << opt(report.covariance_cp) << '\n'
        << "k_s = " << opt(report.k_s) << '\n'
        << "k_i = " << opt(report.k_i) << '\n';
}

} // namespace twinbeam::io
