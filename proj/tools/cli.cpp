#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pgrecruit/errors.hpp"
#include "pgrecruit/estimation.hpp"
#include "pgrecruit/forecast.hpp"
#include "pgrecruit/homogeneity.hpp"
#include "pgrecruit/io.hpp"
#include "pgrecruit/power.hpp"
#include "pgrecruit/reprojection.hpp"
#include "pgrecruit/simulator.hpp"
#include "pgrecruit/special.hpp"

#ifndef PGRECRUIT_VERSION
#define PGRECRUIT_VERSION "unknown"
#endif

namespace pgrecruit::cli
{
namespace
{

namespace fs = std::filesystem;

class OutputError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

const char* const kHelp = R"(usage: pgrecruit <command> [flags]

commands:
  simulate    Monte Carlo ensemble of trial trajectories (needs --config)
  forecast    analytic mean trajectory and predictive bounds (needs --config)
  fit         maximum-likelihood rate parameters from an event file
  test        rate-homogeneity tests on two intervals of an event file
  power       calibrated thresholds, power and minimal centre counts
  reproject   interim re-projection of the completion date

flags:
  --config PATH       scenario file (key = value lines)
  --events PATH       event file: centre_id,country,activation_day,enrollment_day
  --seed INT          root random seed
  --runs INT          Monte Carlo runs
  --workers INT       worker threads
  --out DIR           output directory (default: pgrecruit-out)
  --confidence P      predictive band probability in (0, 1)
  --delta D           test level in (0, 0.5)
  --window-days L     moving-window length in days
  --help, --version

exit codes:
  0 success, 1 usage, 2 parse (input files, config), 3 domain (invalid
  values or data), 4 numeric (fit or search failure), 5 output files
)";

const std::map<std::string, std::string> kFlagKeys{
    {"seed", "seed"},         {"runs", "runs"},   {"workers", "workers"},
    {"confidence", "confidence"}, {"delta", "delta"}, {"window-days", "window_days"},
};

const Config::Schema kSchema{
    {
        "seed", "runs", "workers", "confidence", "delta", "window_days",
        "trial.centres", "trial.horizon", "trial.target", "trial.deadline",
        "centres.count", "centres.shape", "centres.mean_rate", "centres.activation_spread",
        "centres.group",
        "rate.default",
        "forecast.start", "forecast.end",
        "fit.strategy", "fit.from", "fit.to", "fit.starts", "fit.conditioning",
        "timedep.start", "timedep.horizon", "timedep.initial_kappa",
        "test.interval1", "test.interval2",
        "power.kind", "power.mode", "power.m1", "power.q", "power.centres", "power.length1",
        "power.length2", "power.shape", "power.target_power", "power.max_centres",
        "reproject.interim", "reproject.deadline", "reproject.target", "reproject.strategy",
    },
    {"rate.group."},
};

struct Context
{
    std::string command;
    Config config;
    std::string config_path;
    std::string events_path;
    fs::path out_dir = "pgrecruit-out";
    std::vector<std::string> outputs;
    std::ostream* out = nullptr;
};

std::string number(double v)
{
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

std::string day_or_na(const std::optional<double>& d)
{
    return d ? number(*d) : "NA";
}

// Table writer bound to one file in the output directory.
class Table
{
public:
    Table(Context& ctx, const std::string& name, const std::vector<std::string>& columns)
    {
        fs::create_directories(ctx.out_dir);
        const fs::path path = ctx.out_dir / name;
        file_.open(path);
        if (!file_) throw OutputError("cannot write " + path.string());
        ctx.outputs.push_back(name);
        row(columns);
    }

    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) file_ << (i ? "," : "") << cells[i];
        file_ << '\n';
        if (!file_) throw OutputError("write failed");
    }

private:
    std::ofstream file_;
};

template <typename T>
bool parse_number(const std::string& s, T& v)
{
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::uint64_t seed_of(const Config& cfg)
{
    const std::string text = cfg.get_string("seed", "1");
    std::uint64_t v = 0;
    if (!parse_number(text, v)) throw ParseError(cfg.source() + ": seed: expected a nonnegative integer");
    return v;
}

int workers_of(const Config& cfg)
{
    const long w = cfg.get_long("workers", 1);
    if (w < 1 || w > 4096) throw DomainError("workers must be in [1, 4096]");
    return static_cast<int>(w);
}

double confidence_of(const Config& cfg)
{
    const double p = cfg.get_double("confidence", 0.8);
    if (!(p > 0.0 && p < 1.0)) throw DomainError("confidence must be in (0, 1)");
    return p;
}

double delta_of(const Config& cfg)
{
    const double d = cfg.get_double("delta", 0.1);
    if (!(d > 0.0 && d < 0.5)) throw DomainError("delta must be in (0, 0.5)");
    return d;
}

double window_of(const Config& cfg)
{
    const double l = cfg.get_double("window_days", 90.0);
    if (!(l > 0.0)) throw DomainError("window_days must be positive");
    return l;
}

std::string resolve(const Context& ctx, const std::string& path)
{
    const fs::path p(path);
    if (p.is_absolute() || ctx.config_path.empty()) return path;
    return (fs::path(ctx.config_path).parent_path() / p).string();
}

RateSchedule schedule_of(const Config& cfg)
{
    RateSchedule s(cfg.get_rate("rate.default"));
    for (const auto& group : cfg.suffixes("rate.group.")) s.set(group, cfg.get_rate("rate.group." + group));
    return s;
}

std::vector<CentreProfile> centres_of(const Context& ctx)
{
    const Config& cfg = ctx.config;
    if (cfg.has("trial.centres")) return read_centre_file(resolve(ctx, cfg.get_string("trial.centres", "")));
    if (!cfg.has("centres.count")) return {};
    const long n = cfg.get_long("centres.count", 0);
    if (n < 0) throw DomainError("centres.count must be nonnegative");
    if (!cfg.has("centres.mean_rate")) throw UsageError("centres.count needs centres.mean_rate");
    const double shape = cfg.get_double("centres.shape", 1.0);
    const double mean = cfg.get_double("centres.mean_rate", 0.0);
    const double spread = cfg.get_double("centres.activation_spread", 0.0);
    if (!(mean > 0.0)) throw DomainError("centres.mean_rate must be positive");
    if (!(spread >= 0.0)) throw DomainError("centres.activation_spread must be nonnegative");
    const std::string group = cfg.get_string("centres.group", "");
    const auto width = std::to_string(n).size();
    std::vector<CentreProfile> out;
    for (long i = 0; i < n; ++i)
    {
        std::string id = std::to_string(i + 1);
        id = "c" + std::string(width - id.size(), '0') + id;
        CentreProfile c{id, group, shape, shape / mean,
                        std::floor(spread * static_cast<double>(i) / static_cast<double>(n))};
        validate(c);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<CentreEvents> events_of(const Context& ctx)
{
    if (ctx.events_path.empty()) throw UsageError(ctx.command + " needs --events");
    return read_event_file(ctx.events_path);
}

long require_long(const Config& cfg, const std::string& key)
{
    if (!cfg.has(key)) throw UsageError("missing config key '" + key + "'");
    return cfg.get_long(key, 0);
}

double require_double(const Config& cfg, const std::string& key)
{
    if (!cfg.has(key)) throw UsageError("missing config key '" + key + "'");
    return cfg.get_double(key, 0.0);
}

std::pair<double, double> interval_of(const Config& cfg, const std::string& key)
{
    if (!cfg.has(key)) throw UsageError("missing config key '" + key + "'");
    const auto v = cfg.get_doubles(key);
    if (v.size() != 2) throw ParseError(cfg.source() + ": " + key + ": expected 'start, end'");
    if (!(v[1] > v[0])) throw DomainError(key + ": end must follow start");
    return {v[0], v[1]};
}

RateFamily decay_family(const Config& cfg)
{
    if (!cfg.has("timedep.horizon")) throw UsageError("timedep-fit-r needs timedep.horizon");
    return RateFamily::exponential_decay(cfg.get_double("timedep.start", 1.0),
                                         cfg.get_double("timedep.horizon", 1.0),
                                         cfg.get_double("timedep.initial_kappa", 0.001));
}

FitOptions fit_options(const Config& cfg)
{
    FitOptions o;
    o.starts = static_cast<int>(cfg.get_long("fit.starts", 4));
    if (o.starts < 1) throw DomainError("fit.starts must be >= 1");
    return o;
}

long latest_day(const std::vector<CentreEvents>& centres)
{
    long last = 0;
    for (const auto& c : centres)
    {
        last = std::max(last, static_cast<long>(std::ceil(c.activation_day)));
        if (!c.event_days.empty()) last = std::max(last, c.event_days.back());
    }
    return last;
}

double horizon_of(const Context& ctx, const std::vector<CentreProfile>& centres, const RateSchedule& s)
{
    const Config& cfg = ctx.config;
    if (cfg.has("trial.horizon"))
    {
        const long t = cfg.get_long("trial.horizon", 0);
        if (t < 1) throw DomainError("trial.horizon must be >= 1");
        return static_cast<double>(t);
    }
    if (!cfg.has("trial.target")) throw UsageError("set trial.horizon or trial.target");
    const auto h = suggest_horizon(centres, s, require_long(cfg, "trial.target"));
    if (!h) throw DomainError("target is not reachable within the horizon search cap");
    *ctx.out << "horizon: " << *h << " (suggested from the 0.001 lower bound, x1.25)\n";
    return static_cast<double>(*h);
}

double prob_by(const MomentPair& m, long need)
{
    if (need <= 0) return 1.0;
    if (m.mean <= 0.0) return 0.0;
    if (m.variance <= 0.0) return special::poisson_sf(need, m.mean);
    return pg_sf(need, pg_approx_params(m));
}

void write_forecast(Context& ctx, const std::string& name, const RegionForecast& f)
{
    Table t(ctx, name, {"day", "mean", "variance", "lower", "upper"});
    for (Eigen::Index i = 0; i < f.size(); ++i)
    {
        t.row({number(f.times[i]), number(f.mean[i]), number(f.variance[i]), std::to_string(f.lower[i]),
               std::to_string(f.upper[i])});
    }
}

// ---- commands -------------------------------------------------------------

void cmd_simulate(Context& ctx)
{
    const Config& cfg = ctx.config;
    TrialConfig trial;
    trial.centres = centres_of(ctx);
    if (trial.centres.empty()) throw UsageError("simulate needs centres (trial.centres or centres.count)");
    trial.schedule = schedule_of(cfg);
    trial.target = require_long(cfg, "trial.target");
    trial.horizon = static_cast<long>(horizon_of(ctx, trial.centres, trial.schedule));
    trial.seed = seed_of(cfg);
    const long runs = cfg.get_long("runs", 1000);
    const double p = confidence_of(cfg);
    validate(trial);

    const EnsembleSummary e = simulate_ensemble(trial, runs, p, workers_of(cfg));
    const RegionForecast analytic =
        forecast_region(trial.centres, trial.schedule, daily_grid(1.0, static_cast<double>(trial.horizon)), p);

    Table traj(ctx, "trajectory.csv",
               {"day", "sim_mean", "sim_median", "sim_lower", "sim_upper", "analytic_mean", "analytic_lower",
                "analytic_upper"});
    for (Eigen::Index d = 0; d < trial.horizon; ++d)
    {
        traj.row({std::to_string(d + 1), number(e.mean[d]), number(e.median[d]), number(e.lower[d]),
                  number(e.upper[d]), number(analytic.mean[d]), std::to_string(analytic.lower[d]),
                  std::to_string(analytic.upper[d])});
    }
    Table comp(ctx, "completion.csv", {"run", "completion_day"});
    std::vector<int> done;
    for (Eigen::Index r = 0; r < e.completion_day.size(); ++r)
    {
        const int d = e.completion_day[r];
        comp.row({std::to_string(r), d < 0 ? "NA" : std::to_string(d)});
        if (d >= 0) done.push_back(d);
    }
    {
        fs::create_directories(ctx.out_dir);
        std::ofstream ev(ctx.out_dir / "events.csv");
        if (!ev) throw OutputError("cannot write events.csv");
        write_event_csv(ev, trajectory_events(trial, simulate_trial(trial, 0)));
        ctx.outputs.push_back("events.csv");
    }

    std::ostream& out = *ctx.out;
    out << "centres: " << trial.centres.size() << "\nhorizon: " << trial.horizon << "\nruns: " << runs
        << "\nmean total at horizon: " << number(e.mean[trial.horizon - 1])
        << "\nruns reaching target " << trial.target << ": " << done.size() << '\n';
    if (!done.empty())
    {
        std::sort(done.begin(), done.end());
        const auto at = [&](double q) {
            return done[std::min(done.size() - 1, static_cast<std::size_t>(q * done.size()))];
        };
        out << "completion day median " << at(0.5) << ", " << number(100 * p) << "% range " << at((1 - p) / 2)
            << ".." << at((1 + p) / 2) << " (among completed runs)\n";
    }
    if (cfg.has("trial.deadline"))
    {
        const long deadline = cfg.get_long("trial.deadline", 0);
        out << "P(target by day " << deadline << "): " << number(e.prob_success(deadline)) << '\n';
    }
}

void cmd_forecast(Context& ctx)
{
    const Config& cfg = ctx.config;
    const auto centres = centres_of(ctx);
    if (centres.empty()) throw UsageError("forecast needs a nonempty centre list");
    const RateSchedule s = schedule_of(cfg);
    const double p = confidence_of(cfg);
    const double start = cfg.get_double("forecast.start", 0.0);
    const double end = cfg.has("forecast.end") ? cfg.get_double("forecast.end", 0.0) : horizon_of(ctx, centres, s);
    if (!(end > start)) throw DomainError("forecast.end must follow forecast.start");
    const RegionForecast f = forecast_region(centres, s, daily_grid(start, end), p);
    write_forecast(ctx, "forecast.csv", f);

    std::ostream& out = *ctx.out;
    out << "centres: " << centres.size() << "\nmean at day " << number(end) << ": "
        << number(f.mean[f.size() - 1]) << " (" << number(100 * p) << "% bounds " << f.lower[f.size() - 1]
        << ".." << f.upper[f.size() - 1] << ")\n";
    if (cfg.has("trial.target"))
    {
        const long target = require_long(cfg, "trial.target");
        const CompletionEstimate c = time_to_target(f, target);
        Table t(ctx, "completion.csv", {"target", "mean_day", "lower_day", "upper_day", "deadline", "prob_success"});
        std::string deadline = "NA", prob = "NA";
        if (cfg.has("trial.deadline"))
        {
            const double d = cfg.get_double("trial.deadline", 0.0);
            deadline = number(d);
            prob = number(prob_by(region_moments(centres, s, d), target));
        }
        t.row({std::to_string(target), day_or_na(c.mean_day), day_or_na(c.lower_day), day_or_na(c.upper_day),
               deadline, prob});
        out << "target " << target << ": mean day " << day_or_na(c.mean_day) << ", bounds "
            << day_or_na(c.lower_day) << ".." << day_or_na(c.upper_day) << '\n';
        if (prob != "NA") out << "P(target by day " << deadline << "): " << prob << '\n';
    }
}

void cmd_fit(Context& ctx)
{
    const Config& cfg = ctx.config;
    const auto events = events_of(ctx);
    const std::string strategy = cfg.get_string("fit.strategy", "all-data");
    const double from = cfg.get_double("fit.from", 0.0);
    const double to = cfg.has("fit.to") ? cfg.get_double("fit.to", 0.0) : static_cast<double>(latest_day(events));
    const FitOptions opts = fit_options(cfg);

    FitResult f;
    if (strategy == "all-data")
        f = fit_pg(exposure_data(events, RateSchedule(), from, to), opts);
    else if (strategy == "window")
        f = fit_pg(restrict_window(events, to, window_of(cfg)), opts);
    else if (strategy == "timedep-known-r")
        f = fit_pg(exposure_data(events, schedule_of(cfg), from, to), opts);
    else if (strategy == "timedep-fit-r")
        f = fit_pg_timedep(events, decay_family(cfg), from, to, opts);
    else
        throw UsageError("fit.strategy must be all-data, window, timedep-known-r or timedep-fit-r");

    Table t(ctx, "fit.csv", {"parameter", "value"});
    const std::vector<std::pair<std::string, std::string>> rows{
        {"strategy", strategy},
        {"from", number(from)},
        {"to", number(to)},
        {"shape", number(f.shape)},
        {"rate", number(f.rate)},
        {"mean_rate", number(f.mean_rate())},
        {"rate_variance", number(f.rate_variance())},
        {"kappa", f.rate_params.empty() ? "NA" : number(f.rate_params[0])},
        {"log_likelihood", number(f.log_likelihood)},
        {"converged", f.converged ? "true" : "false"},
        {"boundary", f.boundary ? "true" : "false"},
        {"iterations", std::to_string(f.iterations)},
    };
    for (const auto& [k, v] : rows)
    {
        t.row({k, v});
        *ctx.out << k << ": " << v << '\n';
    }
    for (const auto& w : f.warnings) *ctx.out << "warning: " << w << '\n';
}

std::vector<std::string> report_row(const std::string& name, const IntervalData& d1, const IntervalData& d2,
                                    const TestReport& r)
{
    return {name,
            number(d1.start) + "-" + number(d1.end),
            number(d2.start) + "-" + number(d2.end),
            std::to_string(d1.n),
            number(d1.exposure),
            std::to_string(d2.n),
            number(d2.exposure),
            number(r.p_upper),
            number(r.p_lower),
            to_string(r.verdict)};
}

const std::vector<std::string> kTestColumns{"test", "interval1", "interval2", "n1", "U1", "n2", "U2",
                                            "p_upper", "p_lower", "verdict"};

void cmd_test(Context& ctx)
{
    const Config& cfg = ctx.config;
    const auto events = events_of(ctx);
    const auto [a1, b1] = interval_of(cfg, "test.interval1");
    const auto [a2, b2] = interval_of(cfg, "test.interval2");
    const double delta = delta_of(cfg);
    const IntervalData d1 = interval_totals(events, a1, b1);
    const IntervalData d2 = interval_totals(events, a2, b2);

    Table t(ctx, "tests.csv", kTestColumns);
    const auto emit = [&](const TestReport& r) {
        const auto row = report_row(to_string(r.kind), d1, d2, r);
        t.row(row);
        *ctx.out << row[0] << ": p_upper " << row[7] << ", p_lower " << row[8] << " -> " << row[9] << '\n';
    };
    emit(poisson_nonparametric_test(d1, d2, delta));
    emit(poisson_parametric_test(d1, d2, delta));
    try
    {
        const TestReport pg = pg_test(d1, d2, delta, fit_options(cfg));
        emit(pg);
        *ctx.out << "poisson-gamma fit: shape " << number(pg.fit->shape) << ", rate " << number(pg.fit->rate)
                 << '\n';
    }
    catch (const std::exception& e)
    {
        t.row({to_string(TestKind::poisson_gamma), "", "", std::to_string(d1.n), number(d1.exposure),
               std::to_string(d2.n), number(d2.exposure), "NA", "NA", "not-available"});
        *ctx.out << "poisson-gamma: not available (" << e.what() << ")\n";
    }
}

TestKind kind_from(const std::string& s)
{
    if (s == "nonparametric") return TestKind::poisson_nonparametric;
    if (s == "parametric") return TestKind::poisson_parametric;
    if (s == "pg") return TestKind::poisson_gamma;
    throw UsageError("power.kind entries must be nonparametric, parametric or pg");
}

void cmd_power(Context& ctx)
{
    const Config& cfg = ctx.config;
    PowerScenario base;
    base.m1 = cfg.get_double("power.m1", 0.04);
    base.length1 = cfg.get_double("power.length1", 90.0);
    base.length2 = cfg.get_double("power.length2", base.length1);
    base.delta = delta_of(cfg);
    if (cfg.has("power.shape")) base.shape = cfg.get_double("power.shape", 1.0);
    base.runs = cfg.get_long("runs", 100000);
    base.seed = seed_of(cfg);
    base.workers = workers_of(cfg);
    if (!cfg.has("power.q")) throw UsageError("missing config key 'power.q'");
    const auto qs = cfg.get_doubles("power.q");
    const auto centres = cfg.get_longs("power.centres");
    const std::string mode = cfg.get_string("power.mode", centres.empty() ? "min-pvalue" : "evaluate");
    const long cap = cfg.get_long("power.max_centres", 2000);
    const double target_power = cfg.get_double("power.target_power", 0.8);
    if (mode == "evaluate" && centres.empty()) throw UsageError("power.mode = evaluate needs power.centres");
    if (mode != "evaluate" && mode != "min-pvalue" && mode != "min-power")
        throw UsageError("power.mode must be evaluate, min-pvalue or min-power");

    std::vector<TestKind> kinds;
    std::istringstream list(cfg.get_string("power.kind", "nonparametric"));
    for (std::string item; std::getline(list, item, ',');)
    {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        kinds.push_back(kind_from(item));
    }

    Table t(ctx, "power.csv",
            {"Proportion-q", "Sites-Number", "Bound_Type-I-error", "Pvalue_H0", "Pvalue_H1", "Power", "Test",
             "Power_SE", "Target_Met", "Runs"});
    std::ostream& out = *ctx.out;
    out << "Test                   q     N     a(delta)  Pvalue_H0 Pvalue_H1 Power\n";
    for (const TestKind kind : kinds)
        for (const double q : qs)
        {
            PowerScenario s = base;
            s.q = q;
            std::vector<std::pair<PowerResult, std::pair<long, bool>>> results;
            if (mode == "evaluate")
            {
                for (const long n : centres) results.push_back({analyse_power(s.with_centres(n), kind), {n, true}});
            }
            else
            {
                const CentreSearch c = mode == "min-pvalue"
                                           ? min_centres_for_pvalue(s, kind, cap)
                                           : min_centres_for_power(s, kind, target_power, cap);
                results.push_back({c.at_centres, {c.centres, c.target_met}});
            }
            for (const auto& [r, n] : results)
            {
                t.row({number(q), std::to_string(n.first), number(r.a_delta), number(r.pvalue_h0),
                       number(r.pvalue_h1), number(r.power), to_string(kind), number(r.power_se),
                       n.second ? "true" : "false", std::to_string(r.runs)});
                out << std::left << std::setw(22) << to_string(kind) << ' ' << std::setw(5) << number(q) << ' '
                    << std::setw(5) << n.first << ' ' << std::setw(9) << number(r.a_delta) << ' ' << std::setw(9)
                    << number(r.pvalue_h0) << ' ' << std::setw(9) << number(r.pvalue_h1) << ' ' << number(r.power)
                    << (n.second ? "" : "  (search cap reached)") << '\n';
            }
        }
}

std::string file_tag(const Strategy& s)
{
    std::string tag = to_string(s.kind);
    if (s.kind == StrategyKind::window) tag += "-" + number(s.window_days);
    return tag;
}

void cmd_reproject(Context& ctx)
{
    const Config& cfg = ctx.config;
    const auto events = events_of(ctx);
    const double interim = require_double(cfg, "reproject.interim");
    const double deadline = cfg.has("reproject.deadline") ? cfg.get_double("reproject.deadline", 0.0)
                                                          : require_double(cfg, "trial.deadline");
    const long target = cfg.has("reproject.target") ? cfg.get_long("reproject.target", 0)
                                                    : require_long(cfg, "trial.target");
    const double window = window_of(cfg);
    const double delta = delta_of(cfg);
    ReprojectionOptions opts;
    opts.confidence = confidence_of(cfg);
    opts.fit = fit_options(cfg);
    const std::string cond = cfg.get_string("fit.conditioning", "posterior");
    if (cond == "prior")
        opts.conditioning = Conditioning::prior;
    else if (cond != "posterior")
        throw UsageError("fit.conditioning must be posterior or prior");

    std::ostream& out = *ctx.out;
    const std::string choice = cfg.get_string("reproject.strategy", "auto");
    std::vector<Strategy> strategies;
    if (choice == "auto")
    {
        // Two most recent equal intervals. A Poisson flag selects the moving
        // window; the PG test then reports whether overdispersion alone
        // could explain the flag.
        if (interim - 2.0 * window < 0.0)
            throw DomainError("auto workflow needs interim >= 2 * window_days");
        const IntervalData d1 = interval_totals(events, interim - 2.0 * window, interim - window);
        const IntervalData d2 = interval_totals(events, interim - window, interim);
        Table t(ctx, "workflow.csv", kTestColumns);
        bool flagged = false;
        for (const TestReport& r : {poisson_nonparametric_test(d1, d2, delta), poisson_parametric_test(d1, d2, delta)})
        {
            t.row(report_row(to_string(r.kind), d1, d2, r));
            flagged = flagged || r.verdict != Verdict::no_evidence;
            out << to_string(r.kind) << ": " << to_string(r.verdict) << " (p_upper " << number(r.p_upper)
                << ", p_lower " << number(r.p_lower) << ")\n";
        }
        if (flagged)
        {
            try
            {
                const TestReport pg = pg_test(d1, d2, delta, opts.fit);
                t.row(report_row(to_string(pg.kind), d1, d2, pg));
                out << "poisson-gamma: " << to_string(pg.verdict) << " (p_upper " << number(pg.p_upper)
                    << ", p_lower " << number(pg.p_lower) << ")"
                    << (pg.verdict == Verdict::no_evidence
                            ? "; the Poisson flag may reflect rate overdispersion only\n"
                            : "; confirms the Poisson flag\n");
            }
            catch (const std::exception& e)
            {
                out << "poisson-gamma: not available (" << e.what() << ")\n";
            }
        }
        strategies.push_back(flagged ? Strategy::window(window) : Strategy::all_data());
        out << "workflow: " << (flagged ? "time dependence detected" : "no time dependence detected")
            << ", using " << strategies.back().describe() << '\n';
    }
    else if (choice == "all")
    {
        strategies = {Strategy::all_data(), Strategy::window(window)};
        if (cfg.has("rate.default")) strategies.push_back(Strategy::timedep_known(schedule_of(cfg)));
        if (cfg.has("timedep.horizon")) strategies.push_back(Strategy::timedep_fit(decay_family(cfg)));
    }
    else if (choice == "all-data")
        strategies = {Strategy::all_data()};
    else if (choice == "window")
        strategies = {Strategy::window(window)};
    else if (choice == "timedep-known-r")
        strategies = {Strategy::timedep_known(schedule_of(cfg))};
    else if (choice == "timedep-fit-r")
        strategies = {Strategy::timedep_fit(decay_family(cfg))};
    else
        throw UsageError("reproject.strategy must be auto, all, all-data, window, timedep-known-r or timedep-fit-r");

    Table t(ctx, "reproject.csv",
            {"strategy", "shape", "rate", "mean_rate", "kappa", "observed", "mean_day", "lower_day", "upper_day",
             "deadline", "prob_success"});
    for (const Strategy& s : strategies)
    {
        const ReprojectionReport r = reproject(events, interim, deadline, target, s, opts);
        const auto& c = r.completion;
        t.row({s.describe(), number(r.fit.shape), number(r.fit.rate), number(r.fit.mean_rate()),
               r.fit.rate_params.empty() ? "NA" : number(r.fit.rate_params[0]), std::to_string(r.observed),
               day_or_na(c.mean_day), day_or_na(c.lower_day), day_or_na(c.upper_day), number(deadline),
               number(r.prob_success)});
        write_forecast(ctx, "forecast_" + file_tag(s) + ".csv", r.forecast);
        out << s.describe() << ": observed " << r.observed << ", completion mean day " << day_or_na(c.mean_day)
            << " (" << day_or_na(c.lower_day) << ".." << day_or_na(c.upper_day) << "), P(target by "
            << number(deadline) << ") " << number(r.prob_success) << '\n';
        for (const auto& w : r.fit.warnings) out << "warning: " << w << '\n';
    }
}

void write_manifest(Context& ctx)
{
    fs::create_directories(ctx.out_dir);
    std::ofstream m(ctx.out_dir / "manifest.txt");
    if (!m) throw OutputError("cannot write manifest.txt");
    m << "program = pgrecruit " << PGRECRUIT_VERSION << "\ncommand = " << ctx.command << '\n';
    m << "config = " << (ctx.config_path.empty() ? "-" : ctx.config_path) << '\n';
    m << "events = " << (ctx.events_path.empty() ? "-" : ctx.events_path) << '\n';
    m << "seed = " << seed_of(ctx.config) << '\n';
    m << "\n[effective configuration]\n";
    for (const auto& [k, v] : ctx.config.entries()) m << k << " = " << v << '\n';
    m << "\n[outputs]\n";
    for (const auto& o : ctx.outputs) m << o << '\n';
    if (!m) throw OutputError("write failed: manifest.txt");
}

const std::map<std::string, std::function<void(Context&)>> kCommands{
    {"simulate", cmd_simulate}, {"forecast", cmd_forecast}, {"fit", cmd_fit},
    {"test", cmd_test},         {"power", cmd_power},       {"reproject", cmd_reproject},
};

Context parse_args(int argc, const char* const* argv)
{
    Context ctx;
    ctx.command = argv[1];
    if (!kCommands.count(ctx.command)) throw UsageError("unknown command '" + ctx.command + "'");

    std::map<std::string, std::string> flags;
    for (int i = 2; i < argc; ++i)
    {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + arg + "'");
        std::string name = arg.substr(2), value;
        const auto eq = name.find('=');
        if (eq != std::string::npos)
        {
            value = name.substr(eq + 1);
            name = name.substr(0, eq);
        }
        else
        {
            if (i + 1 >= argc) throw UsageError("flag --" + name + " needs a value");
            value = argv[++i];
        }
        const bool known = kFlagKeys.count(name) || name == "config" || name == "events" || name == "out";
        if (!known) throw UsageError("unknown flag --" + name);
        if (flags.count(name)) throw UsageError("flag --" + name + " given twice");
        flags[name] = value;
    }

    if (flags.count("config"))
    {
        ctx.config_path = flags["config"];
        ctx.config = Config::load(ctx.config_path, kSchema);
    }
    else
    {
        std::istringstream empty;
        ctx.config = Config::parse(empty, "<flags>", kSchema);
    }
    if (flags.count("events")) ctx.events_path = flags["events"];
    if (flags.count("out")) ctx.out_dir = flags["out"];
    for (const auto& [flag, key] : kFlagKeys)
    {
        if (!flags.count(flag)) continue;
        const std::string& v = flags[flag];
        double d = 0;
        std::uint64_t u = 0;
        const bool integral = flag == "seed" || flag == "runs" || flag == "workers";
        if (integral ? !parse_number(v, u) : !parse_number(v, d))
            throw UsageError("flag --" + flag + ": invalid value '" + v + "'");
        ctx.config.set(key, v);
    }
    return ctx;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    try
    {
        if (argc < 2) throw UsageError("missing command");
        const std::string first = argv[1];
        if (first == "--help" || first == "-h" || first == "help")
        {
            out << kHelp;
            return exit_ok;
        }
        if (first == "--version")
        {
            out << "pgrecruit " << PGRECRUIT_VERSION << '\n';
            return exit_ok;
        }
        Context ctx = parse_args(argc, argv);
        ctx.out = &out;
        kCommands.at(ctx.command)(ctx);
        write_manifest(ctx);
        return exit_ok;
    }
    catch (const UsageError& e)
    {
        err << "usage error: " << e.what() << "\n\n" << kHelp;
        return exit_usage;
    }
    catch (const ParseError& e)
    {
        err << "parse error: " << e.what() << '\n';
        return exit_parse;
    }
    catch (const DomainError& e)
    {
        err << "domain error: " << e.what() << '\n';
        return exit_domain;
    }
    catch (const NumericError& e)
    {
        err << "numeric error: " << e.what() << '\n';
        return exit_numeric;
    }
    catch (const OutputError& e)
    {
        err << "output error: " << e.what() << '\n';
        return exit_output;
    }
    catch (const fs::filesystem_error& e)
    {
        err << "output error: " << e.what() << '\n';
        return exit_output;
    }
    catch (const std::exception& e)
    {
        err << "numeric error: " << e.what() << '\n';
        return exit_numeric;
    }
}

}  // namespace pgrecruit::cli
