#pragma once

#include <ostream>
#include <stdexcept>

namespace pgrecruit::cli
{

enum ExitCode : int
{
    exit_ok = 0,
    exit_usage = 1,
    exit_parse = 2,
    exit_domain = 3,
    exit_numeric = 4,
    exit_output = 5,
};

class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Runs one command line; tables and the manifest go to the output
/// directory, the summary to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pgrecruit::cli
