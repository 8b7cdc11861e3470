#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace twinbeam {

/// Entry point of the `twinbeam` command-line tool. `args` excludes the
/// program name. Matrix input defaults to `in` and matrix output to `out`;
/// summary lines go to `out` when data is written to a file and to `err`
/// when the data itself occupies `out`. Returns the process exit status.
int run_command(std::vector<std::string> const& args, std::istream& in, std::ostream& out,
                std::ostream& err);

} // namespace twinbeam
