#include "pgrecruit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "pgrecruit/errors.hpp"

namespace pgrecruit
{
namespace
{

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true)
    {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_long(const std::string& s, long& out)
{
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

bool parse_double(const std::string& s, double& out)
{
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty() && std::isfinite(out);
}

std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return in;
}

// Reads the header line and checks it against the expected column names.
void expect_header(std::istream& in, const std::string& source,
                   const std::vector<std::string>& columns, std::size_t& line_no)
{
    std::string line;
    while (std::getline(in, line))
    {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw ParseError(source, line_no, "missing header");
    if (split(line, ',') != columns)
    {
        std::string expected;
        for (const auto& c : columns) expected += (expected.empty() ? "" : ",") + c;
        throw ParseError(source, line_no, "header must be '" + expected + "'");
    }
}

}  // namespace

std::vector<CentreEvents> parse_event_csv(std::istream& in, const std::string& source)
{
    std::size_t line_no = 0;
    expect_header(in, source, {"centre_id", "country", "activation_day", "enrollment_day"}, line_no);

    std::vector<CentreEvents> centres;
    std::unordered_map<std::string, std::size_t> index;
    std::string line;
    while (std::getline(in, line))
    {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 4) throw ParseError(source, line_no, "expected 4 fields");
        const std::string& id = fields[0];
        if (id.empty()) throw ParseError(source, line_no, "empty centre_id");
        long activation = 0;
        if (!parse_long(fields[2], activation) || activation < 0)
        {
            throw ParseError(source, line_no, "activation_day must be a nonnegative integer");
        }

        auto it = index.find(id);
        if (it == index.end())
        {
            it = index.emplace(id, centres.size()).first;
            centres.push_back({id, fields[1], static_cast<double>(activation), {}});
        }
        CentreEvents& c = centres[it->second];
        if (c.group != fields[1] || c.activation_day != static_cast<double>(activation))
        {
            throw ParseError(source, line_no,
                             "centre '" + id + "' repeats with a different country or activation day");
        }

        if (fields[3].empty()) continue;
        long day = 0;
        if (!parse_long(fields[3], day) || day < 0)
        {
            throw ParseError(source, line_no, "enrollment_day must be a nonnegative integer");
        }
        if (day < activation)
        {
            throw ParseError(source, line_no, "centre '" + id + "': enrollment before activation");
        }
        c.event_days.push_back(day);
    }
    for (auto& c : centres) std::sort(c.event_days.begin(), c.event_days.end());
    return centres;
}

std::vector<CentreEvents> read_event_file(const std::string& path)
{
    auto in = open_input(path);
    return parse_event_csv(in, path);
}

void write_event_csv(std::ostream& out, const std::vector<CentreEvents>& centres)
{
    out << "centre_id,country,activation_day,enrollment_day\n";
    for (const auto& c : centres)
    {
        const auto activation = static_cast<long>(c.activation_day);
        if (c.event_days.empty()) out << c.id << ',' << c.group << ',' << activation << ",\n";
        for (const long d : c.event_days)
        {
            out << c.id << ',' << c.group << ',' << activation << ',' << d << '\n';
        }
    }
}

std::vector<CentreProfile> parse_centre_csv(std::istream& in, const std::string& source)
{
    std::size_t line_no = 0;
    expect_header(in, source, {"centre_id", "country", "shape", "rate", "activation_day"}, line_no);
    std::vector<CentreProfile> centres;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    while (std::getline(in, line))
    {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 5) throw ParseError(source, line_no, "expected 5 fields");
        CentreProfile c;
        c.id = f[0];
        c.group = f[1];
        if (c.id.empty()) throw ParseError(source, line_no, "empty centre_id");
        if (!seen.emplace(c.id, line_no).second)
        {
            throw ParseError(source, line_no, "duplicate centre '" + c.id + "'");
        }
        if (!parse_double(f[2], c.shape) || !parse_double(f[3], c.rate)
            || !parse_double(f[4], c.activation_day))
        {
            throw ParseError(source, line_no, "shape, rate and activation_day must be numbers");
        }
        try
        {
            validate(c);
        }
        catch (const DomainError& e)
        {
            throw ParseError(source, line_no, e.what());
        }
        centres.push_back(std::move(c));
    }
    return centres;
}

std::vector<CentreProfile> read_centre_file(const std::string& path)
{
    auto in = open_input(path);
    return parse_centre_csv(in, path);
}

void write_centre_csv(std::ostream& out, const std::vector<CentreProfile>& centres)
{
    const auto precision = out.precision(17);
    out << "centre_id,country,shape,rate,activation_day\n";
    for (const auto& c : centres)
    {
        out << c.id << ',' << c.group << ',' << c.shape << ',' << c.rate << ',' << c.activation_day
            << '\n';
    }
    out.precision(precision);
}

RateFunction parse_rate_function(const std::string& text)
{
    std::istringstream in(text);
    std::string kind;
    in >> kind;
    try
    {
        if (kind == "constant")
        {
            std::string rest;
            if (in >> rest) throw ParseError("'constant' takes no arguments");
            return RateFunction::constant();
        }
        if (kind == "exp-decay")
        {
            std::string a, b, h, rest;
            double start = 0, end = 0, horizon = 0;
            if (!(in >> a >> b >> h) || (in >> rest) || !parse_double(a, start)
                || !parse_double(b, end) || !parse_double(h, horizon))
            {
                throw ParseError("'exp-decay' expects START END HORIZON");
            }
            return RateFunction::exponential_decay(start, end, horizon);
        }
        if (kind == "piecewise")
        {
            std::string spec, rest;
            if (!(in >> spec) || (in >> rest)) throw ParseError("'piecewise' expects DAY:MULT,...");
            std::vector<double> days, mults;
            for (const auto& point : split(spec, ','))
            {
                const auto dm = split(point, ':');
                double d = 0, m = 0;
                if (dm.size() != 2 || !parse_double(dm[0], d) || !parse_double(dm[1], m))
                {
                    throw ParseError("bad breakpoint '" + point + "', expected DAY:MULT");
                }
                days.push_back(d);
                mults.push_back(m);
            }
            return RateFunction::piecewise_linear(std::move(days), std::move(mults));
        }
    }
    catch (const DomainError& e)
    {
        throw ParseError(e.what());
    }
    throw ParseError("unknown rate function '" + kind
                     + "' (expected constant, exp-decay or piecewise)");
}

Config Config::parse(std::istream& in, const std::string& source, const Schema& schema)
{
    Config cfg;
    cfg.source_ = source;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ParseError(source, line_no, "empty key");
        const bool allowed =
            schema.keys.count(key) != 0
            || std::any_of(schema.prefixes.begin(), schema.prefixes.end(), [&](const std::string& p) {
                   return key.size() > p.size() && key.compare(0, p.size(), p) == 0;
               });
        if (!allowed) throw ParseError(source, line_no, "unknown key '" + key + "'");
        if (cfg.values_.count(key)) throw ParseError(source, line_no, "duplicate key '" + key + "'");
        cfg.values_[key] = {value, line_no};
    }
    return cfg;
}

Config Config::load(const std::string& path, const Schema& schema)
{
    auto in = open_input(path);
    return parse(in, path, schema);
}

const Config::Entry& Config::entry(const std::string& key) const
{
    return values_.at(key);
}

void Config::fail(const std::string& key, const std::string& what) const
{
    throw ParseError(source_, entry(key).line, key + ": " + what);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    return has(key) ? entry(key).value : fallback;
}

double Config::get_double(const std::string& key, double fallback) const
{
    if (!has(key)) return fallback;
    double v = 0;
    if (!parse_double(entry(key).value, v)) fail(key, "expected a number");
    return v;
}

long Config::get_long(const std::string& key, long fallback) const
{
    if (!has(key)) return fallback;
    long v = 0;
    if (!parse_long(entry(key).value, v)) fail(key, "expected an integer");
    return v;
}

std::vector<double> Config::get_doubles(const std::string& key) const
{
    std::vector<double> out;
    if (!has(key)) return out;
    for (const auto& item : split(entry(key).value, ','))
    {
        double v = 0;
        if (!parse_double(item, v)) fail(key, "expected a comma-separated list of numbers");
        out.push_back(v);
    }
    return out;
}

std::vector<long> Config::get_longs(const std::string& key) const
{
    std::vector<long> out;
    if (!has(key)) return out;
    for (const auto& item : split(entry(key).value, ','))
    {
        long v = 0;
        if (!parse_long(item, v)) fail(key, "expected a comma-separated list of integers");
        out.push_back(v);
    }
    return out;
}

RateFunction Config::get_rate(const std::string& key) const
{
    if (!has(key)) return RateFunction::constant();
    try
    {
        return parse_rate_function(entry(key).value);
    }
    catch (const ParseError& e)
    {
        fail(key, e.what());
    }
}

std::vector<std::string> Config::suffixes(const std::string& prefix) const
{
    std::vector<std::string> out;
    for (const auto& [key, e] : values_)
    {
        if (key.size() > prefix.size() && key.compare(0, prefix.size(), prefix) == 0)
        {
            out.push_back(key.substr(prefix.size()));
        }
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> Config::entries() const
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, e] : values_) out.emplace_back(key, e.value);
    return out;
}

void Config::set(const std::string& key, const std::string& value)
{
    values_[key] = {value, 0};
}

}  // namespace pgrecruit
