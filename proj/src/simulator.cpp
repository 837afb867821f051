#include "darkscope/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace darkscope {

namespace {

// RNG stream ids, one per independent source of randomness.
constexpr std::uint64_t kLitStream = 1;
constexpr std::uint64_t kSideStream = 2;
constexpr std::uint64_t kPathStream = 3;
constexpr std::uint64_t kFillStreamBase = 100;
constexpr std::uint64_t kLeakStreamBase = 200;

constexpr Nanos kOneMilli = 1'000'000;

void require_prob(double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError(what + " must lie in [0, 1]");
}

bool has_tag(const std::optional<std::string>& truth, std::string_view tag) {
    if (!truth) return false;
    std::string_view s = *truth;
    while (!s.empty()) {
        auto comma = s.find(',');
        if (s.substr(0, comma) == tag) return true;
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return false;
}

TapeEvent make_print(const std::string& symbol, Nanos ts, Side side, double size) {
    TapeEvent e;
    e.kind = EventKind::LitPrint;
    e.ts = ts;
    e.symbol = symbol;
    e.price = 1.0;
    e.size = size;
    e.side = side;
    return e;
}

Side random_side(CounterRng& rng) { return rng.uniform() < 0.5 ? Side::Buy : Side::Sell; }

}  // namespace

double Scenario::mean_duration_at(double t) const {
    double lambda = lit_intensity.front().mean_duration;
    for (const auto& seg : lit_intensity) {
        if (seg.start > t) break;
        lambda = seg.mean_duration;
    }
    return lambda;
}

void validate(const Scenario& s) {
    if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) throw DomainError("scenario duration must be >= 0");
    if (s.lit_intensity.empty() || s.lit_intensity.front().start != 0.0) {
        throw DomainError("lit intensity schedule must start at time 0");
    }
    for (std::size_t i = 0; i < s.lit_intensity.size(); ++i) {
        if (!(s.lit_intensity[i].mean_duration > 0.0)) throw DomainError("lit mean durations must be positive");
        if (i > 0 && !(s.lit_intensity[i].start > s.lit_intensity[i - 1].start)) {
            throw DomainError("lit intensity segments must have increasing start times");
        }
    }
    if (!(s.dark_fill_rate >= 0.0)) throw DomainError("dark fill rate must be >= 0");
    if (s.fills_per_order == 0) throw DomainError("fills per order must be positive");
    if (s.symbol.empty()) throw DomainError("scenario symbol is empty");
    if (!(s.price.start_mid > 0.0) || !(s.price.sigma_per_trade >= 0.0) || !(s.price.impact_horizon > 0.0)) {
        throw DomainError("invalid price model");
    }
    for (const auto& v : s.venues) {
        if (v.venue.empty()) throw DomainError("venue without a name");
        require_prob(v.leak_prob, "leak_prob");
        require_prob(v.leak_prob_above_knee, "leak_prob_above_knee");
        require_prob(v.sweep_prob, "sweep_prob");
        require_prob(v.latent_prob, "latent_prob");
        if (!(v.leak_latency.value > 0.0)) throw DomainError("leak latency must be positive");
        if (!(v.size_log_sd >= 0.0)) throw DomainError("size_log_sd must be >= 0");
    }
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"null", "leaky", "sweep", "latent", "competing", "size_knee"};
    return names;
}

Scenario preset(const std::string& name) {
    Scenario s;
    s.name = name;
    s.price.leak_impact = 1.5;
    VenueProfile a, b;
    a.venue = "DARK-A";
    b.venue = "DARK-B";
    if (name == "null") {
    } else if (name == "leaky") {
        a.leak_prob = 0.5;
        a.leak_latency = {LatencyModel::Kind::Exponential, 0.01};
    } else if (name == "sweep") {
        a.sweep_prob = 0.5;
    } else if (name == "latent") {
        a.latent_prob = 0.5;
    } else if (name == "competing") {
        s.price.competing_drift = 0.1;
    } else if (name == "size_knee") {
        for (VenueProfile* v : {&a, &b}) {
            v->leak_prob = 0.5;
            v->size_leak_knee = 30'000.0;
            v->leak_prob_above_knee = 0.16;
        }
    } else {
        throw DomainError("unknown preset '" + name + "'");
    }
    s.venues = {a, b};
    return s;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

double parse_double(const std::string& key, std::string_view v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw DomainError("bad number for '" + key + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, std::string_view v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw DomainError("bad integer for '" + key + "'");
    return out;
}

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        auto pos = s.find(sep);
        out.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

void set_venue_field(VenueProfile& v, const std::string& field, const std::string& key, std::string_view value) {
    if (field == "leak_prob") v.leak_prob = parse_double(key, value);
    else if (field == "latency") {
        auto colon = value.find(':');
        if (colon == std::string_view::npos) throw DomainError("latency must be exp:<frac> or fixed:<seconds>");
        auto kind = value.substr(0, colon);
        if (kind == "exp") v.leak_latency.kind = LatencyModel::Kind::Exponential;
        else if (kind == "fixed") v.leak_latency.kind = LatencyModel::Kind::Fixed;
        else throw DomainError("latency must be exp:<frac> or fixed:<seconds>");
        v.leak_latency.value = parse_double(key, value.substr(colon + 1));
    } else if (field == "size_log_mean") v.size_log_mean = parse_double(key, value);
    else if (field == "size_log_sd") v.size_log_sd = parse_double(key, value);
    else if (field == "size_leak_knee") v.size_leak_knee = parse_double(key, value);
    else if (field == "leak_prob_above_knee") v.leak_prob_above_knee = parse_double(key, value);
    else if (field == "sweep_prob") v.sweep_prob = parse_double(key, value);
    else if (field == "latent_prob") v.latent_prob = parse_double(key, value);
    else throw DomainError("unknown scenario key '" + key + "'");
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
    Scenario s;
    s.venues.clear();
    std::map<std::string, std::size_t> venue_index;
    std::string text;
    std::size_t lineno = 0;
    try {
        while (std::getline(in, text)) {
            ++lineno;
            std::string_view line = text;
            line = trim(line.substr(0, line.find('#')));
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string_view::npos) throw DomainError("expected key = value");
            std::string key(trim(line.substr(0, eq)));
            std::string_view value = trim(line.substr(eq + 1));

            if (key == "name") s.name = value;
            else if (key == "seed") s.seed = parse_u64(key, value);
            else if (key == "symbol") s.symbol = value;
            else if (key == "duration") s.duration = parse_double(key, value);
            else if (key == "dark_fill_rate") s.dark_fill_rate = parse_double(key, value);
            else if (key == "fills_per_order") s.fills_per_order = parse_u64(key, value);
            else if (key == "lit_intensity") {
                s.lit_intensity.clear();
                for (auto seg : split(value, ',')) {
                    auto parts = split(seg, ':');
                    if (parts.size() != 2) throw DomainError("lit_intensity segments are start:mean_duration");
                    s.lit_intensity.push_back({parse_double(key, parts[0]), parse_double(key, parts[1])});
                }
            } else if (key == "price.start_mid") s.price.start_mid = parse_double(key, value);
            else if (key == "price.sigma_per_trade") s.price.sigma_per_trade = parse_double(key, value);
            else if (key == "price.leak_impact") s.price.leak_impact = parse_double(key, value);
            else if (key == "price.impact_horizon") s.price.impact_horizon = parse_double(key, value);
            else if (key == "price.competing_drift") s.price.competing_drift = parse_double(key, value);
            else if (key == "venues") {
                for (auto name : split(value, ',')) {
                    if (name.empty()) continue;
                    venue_index.emplace(std::string(name), s.venues.size());
                    s.venues.push_back(VenueProfile{});
                    s.venues.back().venue = name;
                }
            } else if (key.starts_with("venue.")) {
                auto dot = key.rfind('.');
                std::string name = key.substr(6, dot - 6);
                auto it = venue_index.find(name);
                if (dot <= 6 || it == venue_index.end()) throw DomainError("venue '" + name + "' not declared in 'venues'");
                set_venue_field(s.venues[it->second], key.substr(dot + 1), key, value);
            } else {
                throw DomainError("unknown scenario key '" + key + "'");
            }
        }
        validate(s);
    } catch (const DomainError& e) {
        throw ParseError(lineno, e.what());
    }
    return s;
}

void write_scenario(std::ostream& out, const Scenario& s) {
    out << fmt::format("name = {}\nseed = {}\nsymbol = {}\nduration = {}\n", s.name, s.seed, s.symbol, s.duration);
    out << "lit_intensity = ";
    for (std::size_t i = 0; i < s.lit_intensity.size(); ++i) {
        out << (i ? "," : "") << fmt::format("{}:{}", s.lit_intensity[i].start, s.lit_intensity[i].mean_duration);
    }
    out << fmt::format("\ndark_fill_rate = {}\nfills_per_order = {}\n", s.dark_fill_rate, s.fills_per_order);
    out << fmt::format("price.start_mid = {}\nprice.sigma_per_trade = {}\nprice.leak_impact = {}\n", s.price.start_mid,
                       s.price.sigma_per_trade, s.price.leak_impact);
    out << fmt::format("price.impact_horizon = {}\nprice.competing_drift = {}\n", s.price.impact_horizon,
                       s.price.competing_drift);
    out << "venues = ";
    for (std::size_t i = 0; i < s.venues.size(); ++i) out << (i ? "," : "") << s.venues[i].venue;
    out << '\n';
    for (const auto& v : s.venues) {
        const std::string p = "venue." + v.venue + ".";
        out << fmt::format("{}leak_prob = {}\n", p, v.leak_prob);
        out << fmt::format("{}latency = {}:{}\n", p,
                           v.leak_latency.kind == LatencyModel::Kind::Fixed ? "fixed" : "exp", v.leak_latency.value);
        out << fmt::format("{}size_log_mean = {}\n{}size_log_sd = {}\n", p, v.size_log_mean, p, v.size_log_sd);
        out << fmt::format("{}size_leak_knee = {}\n{}leak_prob_above_knee = {}\n", p, v.size_leak_knee, p,
                           v.leak_prob_above_knee);
        out << fmt::format("{}sweep_prob = {}\n{}latent_prob = {}\n", p, v.sweep_prob, p, v.latent_prob);
    }
}

// ---------------------------------------------------------------------------
// Generation

Tape gen_lit_tape(const Scenario& s) {
    validate(s);
    Tape tape;
    tape.symbol = s.symbol;
    CounterRng rng = CounterRng(s.seed).split(kLitStream);
    const auto& segs = s.lit_intensity;
    double t = 0.0;
    std::size_t seg = 0;
    // Time-rescaling: spend unit-exponential hazard through the schedule.
    while (true) {
        double hazard = rng.exponential(1.0);
        while (true) {
            double seg_end = seg + 1 < segs.size() ? segs[seg + 1].start : s.duration;
            double step = hazard * segs[seg].mean_duration;
            if (t + step < seg_end || seg + 1 >= segs.size()) {
                t += step;
                break;
            }
            hazard -= (seg_end - t) / segs[seg].mean_duration;
            t = seg_end;
            ++seg;
        }
        if (t >= s.duration) break;
        tape.events.push_back(make_print(s.symbol, from_seconds(t), random_side(rng), 100.0));
    }
    return tape;
}

Tape gen_dark_fills(const Scenario& s) {
    validate(s);
    Tape tape;
    tape.symbol = s.symbol;
    if (s.dark_fill_rate > 0.0) {
        for (std::size_t v = 0; v < s.venues.size(); ++v) {
            const VenueProfile& prof = s.venues[v];
            CounterRng rng = CounterRng(s.seed).split(kFillStreamBase + v);
            double t = 0.0;
            while (true) {
                t += rng.exponential(1.0 / s.dark_fill_rate);
                if (t >= s.duration) break;
                TapeEvent e;
                e.kind = EventKind::DarkFill;
                e.ts = from_seconds(t);
                e.symbol = s.symbol;
                e.price = 1.0;
                e.size = std::exp(prof.size_log_mean + prof.size_log_sd * rng.normal());
                e.side = Side::Buy;
                e.venue = prof.venue;
                tape.events.push_back(std::move(e));
            }
        }
    }
    sort_tape(tape);

    CounterRng side_rng = CounterRng(s.seed).split(kSideStream);
    Side side = Side::Buy;
    for (std::size_t i = 0; i < tape.events.size(); ++i) {
        if (i % s.fills_per_order == 0) side = random_side(side_rng);
        TapeEvent& e = tape.events[i];
        e.side = side;
        e.id = static_cast<std::int64_t>(i);
        e.order = static_cast<std::int64_t>(i / s.fills_per_order);
        e.truth = "clean";
    }
    return tape;
}

Tape inject_leakage(const Tape& lit, const Tape& dark, const Scenario& s) {
    validate(s);
    std::vector<Nanos> lit_ts;
    lit_ts.reserve(lit.size());
    for (const auto& e : lit.events) {
        if (e.is_lit()) lit_ts.push_back(e.ts);
    }
    std::vector<CounterRng> rngs;
    for (std::size_t v = 0; v < s.venues.size(); ++v) rngs.push_back(CounterRng(s.seed).split(kLeakStreamBase + v));

    Tape printed;
    printed.symbol = lit.empty() ? dark.symbol : lit.symbol;
    printed.events = lit.events;
    Tape fills = dark;
    std::size_t leaks = 0, sweeps = 0, latent = 0;

    for (TapeEvent& f : fills.events) {
        if (!f.is_dark() || !f.venue) continue;
        auto prof = std::find_if(s.venues.begin(), s.venues.end(), [&](const VenueProfile& v) { return v.venue == *f.venue; });
        if (prof == s.venues.end()) continue;
        CounterRng& rng = rngs[static_cast<std::size_t>(prof - s.venues.begin())];
        // Fixed draw count per fill keeps streams aligned across scenarios.
        double u_latent = rng.uniform(), u_leak = rng.uniform(), u_delay = rng.uniform(), u_sweep = rng.uniform();
        std::vector<std::string> tags;

        if (u_latent < prof->latent_prob) {
            auto it = std::upper_bound(lit_ts.begin(), lit_ts.end(), f.ts);
            if (it != lit_ts.begin()) {
                f.ts = *std::prev(it) + kOneMilli;
                tags.push_back("latent");
                ++latent;
            }
        }
        double q = f.size >= prof->size_leak_knee ? prof->leak_prob_above_knee : prof->leak_prob;
        if (u_leak < q) {
            double delay;
            if (prof->leak_latency.kind == LatencyModel::Kind::Fixed) {
                delay = prof->leak_latency.value;
            } else {
                double lambda = s.mean_duration_at(to_seconds(f.ts));
                double m = prof->leak_latency.value * lambda;
                double cap = lambda / 10.0;
                delay = -m * std::log1p(-u_delay * -std::expm1(-cap / m));
            }
            TapeEvent p = make_print(printed.symbol, f.ts + std::max<Nanos>(from_seconds(delay), 1), f.side, f.size);
            p.truth = fmt::format("leak:{}", f.id.value_or(-1));
            printed.events.push_back(std::move(p));
            tags.push_back("leak");
            ++leaks;
        }
        if (u_sweep < prof->sweep_prob) {
            TapeEvent p = make_print(printed.symbol, f.ts + kOneMilli, opposite(f.side), f.size);
            p.truth = fmt::format("sweep:{}", f.id.value_or(-1));
            printed.events.push_back(std::move(p));
            tags.push_back("sweep");
            ++sweeps;
        }
        if (!tags.empty()) {
            std::string t;
            for (const auto& tag : tags) t += (t.empty() ? "" : ",") + tag;
            f.truth = t;
        }
    }
    sort_tape(printed);
    sort_tape(fills);
    Tape out = merge_streams(printed, fills);
    out.meta["truth.leaks"] = std::to_string(leaks);
    out.meta["truth.sweeps"] = std::to_string(sweeps);
    out.meta["truth.latent"] = std::to_string(latent);
    return out;
}

PricePath gen_price_path(const Tape& merged, const Scenario& s, std::uint64_t seed, Nanos end) {
    CounterRng rng = CounterRng(seed).split(kPathStream);
    const PriceModel& pm = s.price;
    double x = std::log(pm.start_mid);
    std::vector<PricePath::Sample> samples{{0, x}};
    for (const auto& e : merged.events) {
        if (!e.is_lit()) continue;
        x += pm.sigma_per_trade * rng.normal() / kBasisPoints;
        if (e.ts == samples.back().ts) samples.back().log_mid = x;
        else samples.push_back({e.ts, x});
    }
    if (end > samples.back().ts) samples.push_back({end, x});

    std::vector<PricePath::Impact> impacts;
    // Order spans in fill time, each with its side.
    std::map<std::int64_t, std::tuple<Nanos, Nanos, Side>> spans;
    for (const auto& e : merged.events) {
        if (!e.is_dark()) continue;
        if (pm.leak_impact != 0.0 && (has_tag(e.truth, "leak") || has_tag(e.truth, "sweep"))) {
            impacts.push_back({e.id.value_or(-1), e.ts, sign(e.side) * pm.leak_impact, pm.impact_horizon});
        }
        if (e.order) {
            auto [it, fresh] = spans.try_emplace(*e.order, e.ts, e.ts, e.side);
            if (!fresh) {
                auto& [b, en, side] = it->second;
                b = std::min(b, e.ts);
                en = std::max(en, e.ts);
            }
        }
    }
    std::vector<PricePath::Drift> drifts;
    if (pm.competing_drift != 0.0) {
        std::vector<std::tuple<Nanos, Nanos, Side>> ordered;
        for (const auto& [id, span] : spans) ordered.push_back(span);
        std::sort(ordered.begin(), ordered.end());
        Nanos prev_end = 0;
        for (auto [b, en, side] : ordered) {
            b = std::max(b, prev_end);
            if (en <= b) continue;
            drifts.push_back({b, en, sign(side) * pm.competing_drift});
            prev_end = en;
        }
    }
    return PricePath(std::move(samples), std::move(drifts), std::move(impacts));
}

void attach_prices(Tape& tape, const PricePath& path) {
    for (TapeEvent& e : tape.events) {
        e.price = std::exp(path.log_mid_at(e.ts));
        if (e.is_dark()) e.mid = e.price;
    }
}

Simulation simulate(const Scenario& s) {
    Tape lit = gen_lit_tape(s);
    Tape dark = gen_dark_fills(s);
    Simulation sim;
    sim.tape = inject_leakage(lit, dark, s);
    sim.tape.meta["scenario"] = s.name;
    sim.tape.meta["seed"] = std::to_string(s.seed);
    Nanos end = std::max(from_seconds(s.duration), sim.tape.empty() ? Nanos{0} : sim.tape.events.back().ts);
    sim.path = gen_price_path(sim.tape, s, s.seed, end);
    attach_prices(sim.tape, sim.path);
    return sim;
}

PowerCrossing empirical_power_crossing(double mu, double sigma, std::size_t seeds, std::uint64_t seed,
                                       double t_target, std::size_t max_fills, std::size_t step) {
    if (seeds == 0 || max_fills < 2 || step == 0) throw DomainError("power crossing needs seeds, fills and a step");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    PowerCrossing out;
    for (std::size_t n = std::max<std::size_t>(step, 2); n <= max_fills; n += step) out.grid.push_back(n);
    out.mean_t.assign(out.grid.size(), 0.0);

    const SlippageConfig cfg{5.0};
    const Nanos spacing = 10 * kNanosPerSecond;
    for (std::size_t k = 0; k < seeds; ++k) {
        CounterRng rng = CounterRng(seed).split(k);
        std::vector<PricePath::Sample> samples;
        std::vector<TapeEvent> fills;
        samples.reserve(2 * max_fills);
        double x = std::log(100.0);
        for (std::size_t i = 0; i < max_fills; ++i) {
            TapeEvent f;
            f.kind = EventKind::DarkFill;
            f.ts = static_cast<Nanos>(i) * spacing;
            f.symbol = "SIM";
            f.price = 100.0;
            f.size = 1.0;
            f.side = random_side(rng);
            f.venue = "SIM";
            samples.push_back({f.ts, x});
            x += sign(f.side) * (mu + sigma * rng.normal()) / kBasisPoints;
            samples.push_back({f.ts + from_seconds(cfg.tau), x});
            fills.push_back(std::move(f));
        }
        PricePath path(std::move(samples));
        double sum = 0.0, sum_sq = 0.0;
        std::size_t g = 0;
        for (std::size_t i = 0; i < max_fills && g < out.grid.size(); ++i) {
            double s = *post_fill_slippage(fills[i], path, cfg);
            sum += s;
            sum_sq += s * s;
            std::size_t n = i + 1;
            if (n != out.grid[g]) continue;
            double mean = sum / static_cast<double>(n);
            double var = (sum_sq - sum * mean) / static_cast<double>(n - 1);
            out.mean_t[g] += var > 0.0 ? mean * std::sqrt(static_cast<double>(n) / var) : 0.0;
            ++g;
        }
    }
    for (double& t : out.mean_t) t /= static_cast<double>(seeds);
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
        if (out.mean_t[g] >= t_target) {
            out.crossing = out.grid[g];
            break;
        }
    }
    return out;
}

}  // namespace darkscope
