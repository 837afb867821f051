#include "darkscope/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "darkscope/evidence.hpp"
#include "darkscope/line_format.hpp"
#include "darkscope/policy.hpp"
#include "darkscope/simulator.hpp"
#include "darkscope/slippage.hpp"
#include "darkscope/surprise.hpp"

namespace darkscope::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::optional<std::string> input, output, scenario, preset, path, report;
    std::optional<std::uint64_t> seed;
    std::size_t window_n = 10;
    std::size_t kmax = 5;
    double alpha = 0.05;
    double tau = 5.0;
    std::size_t buckets = 10;
    std::vector<double> thresholds{0, 5'000, 10'000, 15'000, 20'000, 25'000, 30'000, 40'000, 50'000, 60'000};
    double horizon_mult = 50.0;
    // power
    double mu = 0.5;
    double sigma = 12.0;
    std::size_t seeds = 200;
    // backtest
    std::size_t k_min = 3;
    std::vector<double> ladder{5'000, 25'000, 30'000};
    std::size_t pause_after = 2;
    std::string direction = "ignore";
    std::string scope = "order";
    std::string format = "tsv";
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_st>(err);
    auto log = std::make_shared<spdlog::logger>("darkscope", sink);
    log->set_pattern("darkscope: %l: %v");
    log->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("DARKSCOPE_LOG")) log->set_level(spdlog::level::from_str(env));
    return log;
}

std::uint64_t resolve_seed(const Options& o, spdlog::logger& log) {
    if (o.seed) return *o.seed;
    const char* test = std::getenv("DARKSCOPE_TEST");
    if (test && std::string(test) == "1") throw UsageError("--seed is required when DARKSCOPE_TEST=1");
    auto now = std::chrono::system_clock::now().time_since_epoch();
    auto seed = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(now).count());
    log.info("no --seed given, using {}", seed);
    return seed;
}

void check_ranges(const Options& o) {
    if (o.window_n == 0) throw UsageError("--window-n must be at least 1");
    if (o.kmax == 0) throw UsageError("--kmax must be at least 1");
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    if (!(o.tau > 0.0)) throw UsageError("--tau must be positive");
    if (o.buckets == 0) throw UsageError("--buckets must be at least 1");
    if (!(o.horizon_mult > 0.0)) throw UsageError("--horizon-mult must be positive");
    if (!(o.sigma > 0.0)) throw UsageError("--sigma must be positive");
    if (o.seeds == 0) throw UsageError("--seeds must be at least 1");
    if (o.k_min == 0) throw UsageError("--k-min must be at least 1");
}

std::ifstream open_in(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open '" + file + "' for reading");
    return in;
}

// Writes to the named file, or to `fallback` when no name is given.
class Sink {
public:
    Sink(const std::optional<std::string>& file, std::ostream& fallback) {
        if (file) {
            file_.open(*file, std::ios::binary);
            if (!file_) throw std::runtime_error("cannot open '" + *file + "' for writing");
        }
        out_ = file ? &file_ : &fallback;
    }
    std::ostream& operator*() { return *out_; }
    void close() {
        out_->flush();
        if (file_.is_open()) {
            file_.close();
            if (!file_) throw std::runtime_error("write failed");
        }
    }

private:
    std::ofstream file_;
    std::ostream* out_;
};

Tape read_tape(const Options& o) {
    if (!o.input) throw UsageError("--input is required");
    auto in = open_in(*o.input);
    return parse_tape(in);
}

std::optional<PricePath> read_path(const Options& o) {
    if (!o.path) return std::nullopt;
    auto in = open_in(*o.path);
    return parse_path(in);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "NA"; }

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o, spdlog::logger& log) {
    if (o.preset.has_value() == o.scenario.has_value()) throw UsageError("simulate needs exactly one of --preset, --scenario");
    if (!o.output) throw UsageError("--output is required");
    Scenario s;
    if (o.preset) {
        try {
            s = preset(*o.preset);
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
    } else {
        auto in = open_in(*o.scenario);
        s = parse_scenario(in);
    }
    s.seed = resolve_seed(o, log);
    Simulation sim = simulate(s);
    log.info("simulated {} events ({} name, seed {})", sim.tape.size(), s.name, s.seed);

    Sink tape_out(o.output, std::cerr);
    write_tape(*tape_out, sim.tape);
    tape_out.close();
    Sink path_out(o.path.value_or(*o.output + ".path"), std::cerr);
    write_path(*path_out, sim.path);
    path_out.close();
    return kExitOk;
}

void emit_evidence(std::ostream& out, const EvidenceLedger& ledger, std::string_view kind) {
    const auto& h = ledger.history().back();
    Line line;
    line["kind"] = "evidence";
    line["ts"] = h.ts;
    line["venue"] = ledger.venue();
    line["ledger"] = std::string(kind);
    line["k"] = h.result.k;
    line["statistic"] = h.result.statistic;
    line["combined_p"] = h.result.combined_p;
    out << dump_line(line) << '\n';
}

int cmd_score(const Options& o, std::ostream& console, spdlog::logger& log) {
    Tape tape = read_tape(o);
    std::optional<PricePath> path = read_path(o);
    ScoreConfig cfg{o.window_n, o.horizon_mult};
    std::vector<SurpriseRecord> records = score_tape(tape, cfg);
    const SlippageConfig slip{o.tau};

    std::map<std::string, EvidenceLedger> forward, latent;
    auto ledger = [&](std::map<std::string, EvidenceLedger>& m, const std::string& venue) -> EvidenceLedger& {
        return m.try_emplace(venue, venue, o.kmax).first->second;
    };

    Sink out(o.output, console);
    std::size_t censored = 0;
    for (const SurpriseRecord& r : records) {
        if (!r.p_fwd) {
            ++censored;
            continue;
        }
        const TapeEvent& f = r.fill;
        const std::string venue = f.venue.value_or("");
        Line line;
        line["kind"] = "surprise";
        line["ts"] = f.ts;
        line["venue"] = venue;
        if (f.id) line["id"] = *f.id;
        if (f.order) line["order"] = *f.order;
        line["side"] = std::string(to_string(f.side));
        line["size"] = f.size;
        line["delta_fwd"] = *r.delta_fwd;
        line["p_fwd"] = *r.p_fwd;
        line["delta_bwd"] = *r.delta_bwd;
        line["p_bwd"] = *r.p_bwd;
        line["n"] = r.n_used;
        line["mean"] = r.mean_used;
        line["next_side"] = std::string(to_string(r.next_lit_side));
        if (path && f.side != Side::Unknown) {
            if (auto s = post_fill_slippage(f, *path, slip)) line["slippage_bp"] = *s;
        }
        *out << dump_line(line) << '\n';

        for (const std::string& v : {venue, std::string("*")}) {
            ledger(forward, v).update(f.ts, *r.p_fwd);
            emit_evidence(*out, ledger(forward, v), "forward");
            ledger(latent, v).update(f.ts, *r.p_bwd);
            emit_evidence(*out, ledger(latent, v), "latent");
        }
    }
    out.close();
    log.info("scored {} fills, {} censored", records.size() - censored, censored);
    return kExitOk;
}

int cmd_report(const Options& o, std::ostream& console, spdlog::logger&) {
    if (!o.input) throw UsageError("--input is required");
    if (o.format != "tsv" && o.format != "lines") throw UsageError("--format must be tsv or lines");
    auto in = open_in(*o.input);
    std::vector<FillOutcome> fills;
    for_each_line(in, [&](const Line& line, std::size_t lineno) {
        if (get_string(line, "kind", lineno) != "surprise") return;
        fills.push_back({find_number(line, "p_fwd", lineno), find_number(line, "slippage_bp", lineno),
                         get_number(line, "size", lineno)});
    });
    if (fills.empty()) throw DomainError("report: no surprise records in input");
    auto buckets = bucket_report(fills, o.buckets);
    auto thresholds = size_threshold_report(fills, o.thresholds, o.alpha);

    Sink out(o.output, console);
    if (o.format == "tsv") {
        *out << "# p_fwd buckets\np_lo\tp_hi\tn\tmean_bp\tstderr_bp\n";
        for (const BucketRow& b : buckets) {
            *out << fmt::format("{:.4f}\t{:.4f}\t{}\t{}\t{}\n", b.p_lo, b.p_hi, b.n, fmt_opt(b.mean_bp), fmt_opt(b.stderr_bp));
        }
        *out << fmt::format("# size thresholds (alpha {})\nthreshold\tcohort\tsignalling\tshare\n", o.alpha);
        for (const ThresholdRow& t : thresholds) {
            *out << fmt::format("{}\t{}\t{}\t{}\n", t.threshold, t.cohort, t.signalling, fmt_opt(t.share));
        }
    } else {
        for (const BucketRow& b : buckets) {
            Line line;
            line["kind"] = "report";
            line["table"] = "bucket";
            line["p_lo"] = b.p_lo;
            line["p_hi"] = b.p_hi;
            line["n"] = b.n;
            if (b.mean_bp) line["mean_bp"] = *b.mean_bp;
            if (b.stderr_bp) line["stderr_bp"] = *b.stderr_bp;
            *out << dump_line(line) << '\n';
        }
        for (const ThresholdRow& t : thresholds) {
            Line line;
            line["kind"] = "report";
            line["table"] = "threshold";
            line["threshold"] = t.threshold;
            line["cohort"] = t.cohort;
            line["signalling"] = t.signalling;
            if (t.share) line["share"] = *t.share;
            *out << dump_line(line) << '\n';
        }
    }
    out.close();
    return kExitOk;
}

int cmd_backtest(const Options& o, std::ostream& console, spdlog::logger& log) {
    PolicyConfig cfg;
    cfg.alpha = o.alpha;
    cfg.k_min = o.k_min;
    cfg.k_max = o.kmax;
    cfg.min_fill_ladder = o.ladder;
    cfg.pause_after = o.pause_after;
    cfg.score = {o.window_n, o.horizon_mult};
    if (o.scope != "order" && o.scope != "tape") throw UsageError("--scope must be order or tape");
    cfg.per_order = o.scope == "order";
    try {
        cfg.direction_filter = parse_direction_filter(o.direction);
        validate(cfg);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }

    Tape tape = read_tape(o);
    std::optional<PricePath> path = read_path(o);
    if (!path) {
        log.warn("no --path given; pricing from the tape itself");
        path = path_from_tape(tape);
    }
    BacktestReport report = replay(tape, *path, cfg);
    log.info("{} decisions, {} actions, {} of {} fills dropped", report.decisions, report.actions.size(),
             report.fills_dropped, report.fills);

    Sink out(o.output, console);
    write_actions(*out, report.actions);
    if (o.report || !o.output) {
        Sink rep(o.report, *out);
        write_cohorts(*rep, report);
        rep.close();
    } else {
        Sink rep(*o.output + ".tsv", *out);
        write_cohorts(*rep, report);
        rep.close();
    }
    out.close();
    return kExitOk;
}

int cmd_power(const Options& o, std::ostream& console, spdlog::logger& log) {
    double t = min_fills_bound(o.mu, o.sigma);
    Sink out(o.output, console);
    *out << fmt::format("T = {:.10g}\n", t);
    if (std::isfinite(t)) {
        std::uint64_t seed = resolve_seed(o, log);
        auto max_fills = static_cast<std::size_t>(std::ceil(16.0 * t));
        auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t / 36.0)));
        PowerCrossing pc = empirical_power_crossing(o.mu, o.sigma, o.seeds, seed, 2.0, std::max<std::size_t>(max_fills, 2), step);
        if (pc.crossing) *out << fmt::format("crossing = {} (4T = {:.10g}, seeds = {})\n", pc.crossing, 4.0 * t, o.seeds);
        else *out << fmt::format("crossing = none within {} fills (seeds = {})\n", max_fills, o.seeds);
    }
    out.close();
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    auto log = make_logger(err);
    Options o;
    CLI::App app{"Dark fill signalling diagnostics", "darkscope"};
    app.require_subcommand(1);

    auto common_io = [&](CLI::App* c) {
        c->add_option("--input", o.input, "Input file");
        c->add_option("--output", o.output, "Output file");
    };
    auto scoring = [&](CLI::App* c) {
        c->add_option("--window-n", o.window_n, "Lit durations in the surprise window")->capture_default_str();
        c->add_option("--kmax", o.kmax, "p-values per evidence ledger")->capture_default_str();
        c->add_option("--horizon-mult", o.horizon_mult, "Forward horizon in window means")->capture_default_str();
    };

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic tape and price path");
    sim->add_option("--output", o.output, "Tape file")->required();
    sim->add_option("--path", o.path, "Price path file (default <output>.path)");
    sim->add_option("--preset", o.preset, "Canonical scenario");
    sim->add_option("--scenario", o.scenario, "Scenario file");
    sim->add_option("--seed", o.seed, "Random seed");

    auto* score = app.add_subcommand("score", "Surprise p-values and evidence ledgers");
    common_io(score);
    scoring(score);
    score->add_option("--path", o.path, "Price path, adds post-fill slippage");
    score->add_option("--tau", o.tau, "Slippage horizon in seconds")->capture_default_str();
    score->add_option("--seed", o.seed, "Unused; accepted for uniformity");

    auto* back = app.add_subcommand("backtest", "Replay the routing policy against a tape");
    common_io(back);
    scoring(back);
    back->add_option("--path", o.path, "Price path (default: prices on the tape)");
    back->add_option("--report", o.report, "Cohort table (default <output>.tsv)");
    back->add_option("--alpha", o.alpha, "Combined p threshold")->capture_default_str();
    back->add_option("--k-min", o.k_min, "Fills before acting")->capture_default_str();
    back->add_option("--ladder", o.ladder, "Minimum-fill ladder")->delimiter(',')->capture_default_str();
    back->add_option("--pause-after", o.pause_after, "Escalations before pausing")->capture_default_str();
    back->add_option("--direction", o.direction, "ignore, same_side_only or opposite_side_only")->capture_default_str();
    back->add_option("--scope", o.scope, "Ledger scope: order or tape")->capture_default_str();
    back->add_option("--seed", o.seed, "Unused; accepted for uniformity");

    auto* power = app.add_subcommand("power", "Fills needed to detect mean slippage");
    power->add_option("--output", o.output, "Output file");
    power->add_option("--mu", o.mu, "Mean slippage per fill (bp)")->capture_default_str();
    power->add_option("--sigma", o.sigma, "Slippage noise per fill (bp)")->capture_default_str();
    power->add_option("--seeds", o.seeds, "Simulated sequences")->capture_default_str();
    power->add_option("--seed", o.seed, "Random seed");

    auto* report = app.add_subcommand("report", "Bucket and size-threshold tables from scored fills");
    common_io(report);
    report->add_option("--buckets", o.buckets, "p-value buckets")->capture_default_str();
    report->add_option("--thresholds", o.thresholds, "Comma list of size thresholds")->delimiter(',');
    report->add_option("--alpha", o.alpha, "Signalling threshold")->capture_default_str();
    report->add_option("--format", o.format, "tsv or lines")->capture_default_str();
    report->add_option("--seed", o.seed, "Unused; accepted for uniformity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        check_ranges(o);
        if (sim->parsed()) return cmd_simulate(o, *log);
        if (score->parsed()) return cmd_score(o, out, *log);
        if (back->parsed()) return cmd_backtest(o, out, *log);
        if (power->parsed()) return cmd_power(o, out, *log);
        if (report->parsed()) return cmd_report(o, out, *log);
    } catch (const UsageError& e) {
        err << "darkscope: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "darkscope: " << e.what() << '\n';
        return kExitDataError;
    }
    return kExitUsage;
}

}  // namespace darkscope::cli
