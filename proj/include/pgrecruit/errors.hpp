#pragma once

#include <stdexcept>
#include <string>

namespace pgrecruit
{

/// Invalid parameter values or data that violate a documented precondition.
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/// Malformed input text: event files, centre tables, scenario configs.
class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line)
    {
    }
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

/// A numerical procedure could not produce a usable answer (fit failure,
/// search bound exceeded without a fallback, non-finite results).
class NumericError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pgrecruit
