#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pgrecruit/estimation.hpp"
#include "pgrecruit/rate_model.hpp"

namespace pgrecruit
{

/// Event file: header `centre_id,country,activation_day,enrollment_day`, one
/// row per enrolled patient. A row with an empty enrollment_day registers a
/// centre without events. Days are nonnegative integers and every row of a
/// centre must repeat the same country and activation day. Centres keep
/// their order of first appearance; event days are sorted.
std::vector<CentreEvents> parse_event_csv(std::istream& in, const std::string& source);
std::vector<CentreEvents> read_event_file(const std::string& path);
void write_event_csv(std::ostream& out, const std::vector<CentreEvents>& centres);

/// Centre file: header `centre_id,country,shape,rate,activation_day`.
std::vector<CentreProfile> parse_centre_csv(std::istream& in, const std::string& source);
std::vector<CentreProfile> read_centre_file(const std::string& path);
void write_centre_csv(std::ostream& out, const std::vector<CentreProfile>& centres);

/// Rate-function text: `constant`, `exp-decay START END HORIZON`, or
/// `piecewise DAY:MULT,DAY:MULT,...`. Throws ParseError.
RateFunction parse_rate_function(const std::string& text);

/// Flat `key = value` configuration with `#` comments. Keys are checked
/// against an allow-list of exact names and prefixes; values are typed on
/// access, and errors name the line the key came from.
class Config
{
public:
    struct Schema
    {
        std::set<std::string> keys;
        std::set<std::string> prefixes;  ///< e.g. "rate.group." admits rate.group.<name>
    };

    static Config parse(std::istream& in, const std::string& source, const Schema& schema);
    static Config load(const std::string& path, const Schema& schema);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<long> get_longs(const std::string& key) const;
    RateFunction get_rate(const std::string& key) const;

    /// Keys under `prefix` with the prefix stripped.
    std::vector<std::string> suffixes(const std::string& prefix) const;
    /// Entries in key order, for manifests.
    std::vector<std::pair<std::string, std::string>> entries() const;

    /// Adds or replaces a value (command-line overrides); not schema-checked.
    void set(const std::string& key, const std::string& value);

    const std::string& source() const { return source_; }

private:
    struct Entry
    {
        std::string value;
        std::size_t line = 0;
    };
    const Entry& entry(const std::string& key) const;
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

    std::string source_;
    std::map<std::string, Entry> values_;
};

}  // namespace pgrecruit
