#include "arwlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "arwlab/animals.hpp"
#include "arwlab/criterion.hpp"
#include "arwlab/csv.hpp"
#include "arwlab/error.hpp"
#include "arwlab/msia.hpp"
#include "arwlab/rng.hpp"

namespace arwlab {

using nlohmann::json;

std::string_view to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::arw: return "arw";
    case ExperimentKind::msia: return "msia";
    case ExperimentKind::couple: return "couple";
    case ExperimentKind::criterion: return "criterion";
    case ExperimentKind::animals: return "animals";
    case ExperimentKind::sweep: return "sweep";
    }
    return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view s) {
    for (auto k : {ExperimentKind::arw, ExperimentKind::msia, ExperimentKind::couple, ExperimentKind::criterion,
                   ExperimentKind::animals, ExperimentKind::sweep})
        if (to_string(k) == s) return k;
    throw Error(ErrorKind::configuration, "unknown experiment kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- config

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    throw Error(ErrorKind::configuration, "'" + key + "': " + why);
}

template <class T>
T get(const json& doc, const std::string& key, T fallback) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        bad(key, "wrong type");
    }
}

double parse_rate(const json& v, const std::string& key) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "infinity") return infinite_rate;
        bad(key, "expected a positive number or \"inf\"");
    }
    if (!v.is_number()) bad(key, "expected a positive number or \"inf\"");
    const double x = v.get<double>();
    if (!(x > 0.0)) bad(key, "must be positive");
    return x;
}

const std::set<std::string> known_orderings{"lexicographic", "reverse", "random-permutation", "source-by-source"};

void check_network_spec(const json& spec) {
    if (!spec.is_object()) bad("network", "expected an object");
    const int forms = spec.contains("lattice") + spec.contains("inline") + spec.contains("file");
    if (forms != 1 || spec.size() != 1) bad("network", "expected exactly one of lattice, inline, file");
    if (spec.contains("lattice")) {
        const auto& l = spec.at("lattice");
        if (!l.is_object() || !l.contains("d") || !l.contains("m")) bad("network.lattice", "needs d and m");
        if (get<int>(l, "d", 0) < 1) bad("network.lattice.d", "must be >= 1");
        if (get<int>(l, "m", 0) < 1) bad("network.lattice.m", "must be >= 1");
    }
}

void check_occupation_spec(const json& spec) {
    if (!spec.is_object() || !spec.contains("type") || !spec.at("type").is_string())
        bad("occupation", "expected an object with a string 'type'");
    const auto type = spec.at("type").get<std::string>();
    if (type == "constant" || type == "point") {
        if (!spec.contains("k")) bad("occupation.k", "required for " + type);
        return;
    }
    if (type == "file") {
        if (!spec.contains("path")) bad("occupation.path", "required for file");
        return;
    }
    try {
        (void)ergodic_spec_from_json(spec);
    } catch (const Error& e) {
        bad("occupation", e.what());
    }
}

} // namespace

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::configuration, "configuration must be a JSON object");
    static const std::set<std::string> allowed{
        "kind", "name", "seed", "trials", "out", "jobs", "format", "network", "occupation", "sleep_rate", "boundary",
        "max_events", "visits_at_least", "ordering", "compare_ordering", "gamma_fraction", "schedule",
        "region_metric", "n_max", "exact_cap", "grid", "hop_trace", "description"};
    for (const auto& [key, _] : doc.items())
        if (!allowed.contains(key)) bad(key, "unknown key");

    ExperimentConfig c;
    c.document = doc;
    if (!doc.contains("kind")) bad("kind", "required");
    c.kind = experiment_kind_from_string(get<std::string>(doc, "kind", ""));
    c.name = get<std::string>(doc, "name", c.name);
    if (c.name.empty()) bad("name", "must not be empty");
    c.seed = get<std::uint64_t>(doc, "seed", 0);
    if (doc.contains("trials") && !doc.at("trials").is_number_integer()) bad("trials", "expected an integer");
    const auto trials = get<std::int64_t>(doc, "trials", 1);
    if (trials < 1) bad("trials", "must be >= 1");
    c.trials = static_cast<std::uint64_t>(trials);
    c.out = get<std::string>(doc, "out", "out");
    const auto jobs = get<std::int64_t>(doc, "jobs", 1);
    if (jobs < 1) bad("jobs", "must be >= 1");
    c.jobs = static_cast<std::size_t>(jobs);
    const auto format = get<std::string>(doc, "format", "csv");
    if (format == "csv") c.format = OutputFormat::csv;
    else if (format == "json") c.format = OutputFormat::json;
    else bad("format", "expected csv or json");

    if (!doc.contains("network")) bad("network", "required");
    c.network = doc.at("network");
    check_network_spec(c.network);
    if (!doc.contains("occupation")) bad("occupation", "required");
    c.occupation = doc.at("occupation");
    check_occupation_spec(c.occupation);

    if (doc.contains("sleep_rate")) c.sleep_rate = parse_rate(doc.at("sleep_rate"), "sleep_rate");
    const auto boundary = get<std::string>(doc, "boundary", "absorbing");
    if (boundary == "absorbing") c.boundary = Boundary::absorbing;
    else if (boundary == "closed") c.boundary = Boundary::closed;
    else bad("boundary", "expected absorbing or closed");
    c.max_events = get<std::uint64_t>(doc, "max_events", c.max_events);
    if (c.max_events == 0) bad("max_events", "must be positive");
    c.visits_at_least = get<std::uint64_t>(doc, "visits_at_least", c.visits_at_least);
    c.hop_trace = get<bool>(doc, "hop_trace", false);
    if (c.hop_trace && c.kind != ExperimentKind::arw) bad("hop_trace", "only arw experiments record hops");

    c.ordering = get<std::string>(doc, "ordering", c.ordering);
    if (!known_orderings.contains(c.ordering)) bad("ordering", "unknown ordering '" + c.ordering + "'");
    if (doc.contains("compare_ordering")) {
        c.compare_ordering = get<std::string>(doc, "compare_ordering", "");
        if (!known_orderings.contains(*c.compare_ordering)) bad("compare_ordering", "unknown ordering");
    }
    c.gamma_fraction = get<double>(doc, "gamma_fraction", c.gamma_fraction);
    if (!(c.gamma_fraction >= 0.0 && c.gamma_fraction <= 1.0)) bad("gamma_fraction", "must lie in [0, 1]");

    c.schedule = get<std::vector<int>>(doc, "schedule", {});
    for (std::size_t i = 0; i < c.schedule.size(); ++i) {
        if (c.schedule[i] < 1) bad("schedule", "radii must be >= 1");
        if (i && c.schedule[i] <= c.schedule[i - 1]) bad("schedule", "must be strictly increasing");
    }
    if (c.kind == ExperimentKind::criterion && c.schedule.empty()) bad("schedule", "required for criterion");
    try {
        c.region_metric = metric_from_string(get<std::string>(doc, "region_metric", "graph"));
    } catch (const Error&) {
        bad("region_metric", "unknown metric");
    }
    const auto n_max = get<std::int64_t>(doc, "n_max", 20);
    if (n_max < 1) bad("n_max", "must be >= 1");
    c.n_max = static_cast<std::size_t>(n_max);
    c.exact_cap = get<std::size_t>(doc, "exact_cap", c.exact_cap);

    if (c.kind == ExperimentKind::sweep) {
        if (!doc.contains("grid") || !doc.at("grid").is_object()) bad("grid", "required for sweep");
        const auto& g = doc.at("grid");
        for (const auto& [key, _] : g.items())
            if (key != "mu" && key != "lambda" && key != "m" && key != "visits_at_least") bad("grid." + key, "unknown axis");
        c.grid.mu = get<std::vector<double>>(g, "mu", {});
        if (g.contains("lambda")) {
            if (!g.at("lambda").is_array()) bad("grid.lambda", "expected an array");
            for (const auto& v : g.at("lambda")) c.grid.lambda.push_back(parse_rate(v, "grid.lambda"));
        }
        c.grid.m = get<std::vector<int>>(g, "m", {});
        c.grid.visits_at_least = get<std::uint64_t>(g, "visits_at_least", c.visits_at_least);
        if (c.grid.mu.empty() && c.grid.lambda.empty() && c.grid.m.empty()) bad("grid", "needs at least one axis");
        for (double mu : c.grid.mu)
            if (!(mu >= 0.0)) bad("grid.mu", "must be nonnegative");
        for (int m : c.grid.m)
            if (m < 1) bad("grid.m", "must be >= 1");
        if (!c.grid.m.empty() && !c.network.contains("lattice")) bad("grid.m", "needs a lattice network");
        if (!c.grid.mu.empty()) {
            const auto type = c.occupation.value("type", std::string());
            const auto pmf = c.occupation.value("pmf", json::object()).value("type", std::string());
            if (type != "iid" || (pmf != "poisson" && pmf != "bernoulli"))
                bad("grid.mu", "needs an iid poisson or bernoulli occupation");
            for (double mu : c.grid.mu)
                if (pmf == "bernoulli" && mu > 1.0) bad("grid.mu", "bernoulli intensity must be <= 1");
        }
    } else if (doc.contains("grid")) {
        bad("grid", "only valid for sweep");
    }
    return c;
}

std::uint64_t trial_seed(std::uint64_t master, std::string_view experiment, std::uint64_t cell, std::uint64_t trial) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : experiment) h = (h ^ ch) * 0x100000001B3ULL;
    return rng::derive(master, {static_cast<std::uint64_t>(rng::Tag::trial), h, cell, trial});
}

std::uint64_t config_hash(const json& document) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : document.dump()) h = (h ^ ch) * 0x100000001B3ULL;
    return h;
}

// ---------------------------------------------------------------- aggregation, pool

void Welford::add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

double Welford::std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) body(i);
        });
}

// ---------------------------------------------------------------- builders

Network build_network(const json& spec) {
    check_network_spec(spec);
    try {
        if (spec.contains("inline")) return network_from_json(spec.at("inline"));
        if (spec.contains("file")) {
            std::ifstream in(spec.at("file").get<std::string>());
            if (!in) bad("network.file", "cannot open");
            return network_from_json(json::parse(in));
        }
        const auto& l = spec.at("lattice");
        const int d = l.at("d").get<int>();
        const int m = l.at("m").get<int>();
        Metric metric = Metric::graph;
        try {
            metric = metric_from_string(l.value("metric", std::string("graph")));
        } catch (const Error&) {
            bad("network.lattice.metric", "unknown metric");
        }
        ConductanceFn fn;
        if (l.contains("conductance")) {
            const auto& cs = l.at("conductance");
            const auto type = cs.value("type", std::string("constant"));
            if (type == "constant") {
                const double c = cs.value("value", 1.0);
                fn = [c](std::span<const int>, std::span<const int>) { return c; };
            } else if (type == "uniform") {
                const double lo = cs.at("low").get<double>(), hi = cs.at("high").get<double>();
                const auto seed = cs.value("seed", std::uint64_t{0});
                if (!(lo > 0.0 && hi >= lo)) bad("network.lattice.conductance", "needs 0 < low <= high");
                fn = [=](std::span<const int> a, std::span<const int> b) {
                    // Keyed by the unordered coordinate pair.
                    auto key = [](std::span<const int> x) {
                        std::uint64_t h = 0x9E3779B97F4A7C15ULL;
                        for (int v : x) h = rng::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
                        return h;
                    };
                    std::uint64_t ka = key(a), kb = key(b);
                    if (ka > kb) std::swap(ka, kb);
                    rng::Stream s(seed, rng::Tag::campaign, {ka, kb});
                    return lo + (hi - lo) * s.uniform();
                };
            } else {
                bad("network.lattice.conductance.type", "expected constant or uniform");
            }
        }
        return build_lattice(d, m, metric, fn);
    } catch (const json::exception& e) {
        bad("network", e.what());
    }
}

Occupation build_occupation(const json& spec, const Network& net, std::uint64_t seed) {
    check_occupation_spec(spec);
    const auto type = spec.at("type").get<std::string>();
    try {
        if (type == "constant") return Occupation::constant(net, net.interior_set(), spec.at("k").get<std::uint32_t>());
        if (type == "point") {
            VertexId at = net.origin();
            if (spec.contains("at")) {
                const auto& a = spec.at("at");
                if (a.is_array()) {
                    const auto coords = a.get<std::vector<int>>();
                    const auto v = net.find(coords);
                    if (!v) bad("occupation.at", "no vertex at these coordinates");
                    at = *v;
                } else {
                    at = a.get<VertexId>();
                    net.check_vertex(at);
                }
            }
            return Occupation::point(net, at, spec.at("k").get<std::uint32_t>());
        }
        if (type == "file") {
            std::ifstream in(spec.at("path").get<std::string>());
            if (!in) bad("occupation.path", "cannot open");
            auto occ = read_occupation_csv(in);
            if (occ.size() != net.size()) bad("occupation.path", "vertex count differs from network");
            return occ;
        }
        return sample_ergodic(net, ergodic_spec_from_json(spec), net.interior_set(), seed);
    } catch (const json::exception& e) {
        bad("occupation", e.what());
    }
}

// ---------------------------------------------------------------- output

namespace {

struct Table {
    std::vector<std::string> columns;
    std::vector<json> rows; // objects keyed by column
};

std::string cell_text(const json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return csv::format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

json number(double x) {
    if (std::isfinite(x)) return x;
    return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

class Writer {
public:
    explicit Writer(const ExperimentConfig& cfg) : cfg_(cfg) {
        std::error_code ec;
        std::filesystem::create_directories(cfg.out, ec);
        if (ec) throw Error(ErrorKind::configuration, "cannot create output directory " + cfg.out.string());
    }

    void table(const std::string& stem, const Table& t) {
        if (cfg_.format == OutputFormat::csv) {
            std::ostringstream os;
            csv::write_row(os, t.columns);
            for (const auto& r : t.rows) {
                std::vector<std::string> fields;
                for (const auto& c : t.columns) fields.push_back(r.contains(c) ? cell_text(r.at(c)) : "");
                csv::write_row(os, fields);
            }
            file(stem + ".csv", os.str());
        } else {
            json arr = json::array();
            for (const auto& r : t.rows) {
                json o = json::object();
                for (const auto& c : t.columns) o[c] = r.contains(c) ? r.at(c) : json(nullptr);
                arr.push_back(std::move(o));
            }
            file(stem + ".json", arr.dump(2) + "\n");
        }
    }

    void document(const std::string& name, const json& j) { file(name, j.dump(2) + "\n"); }

    const std::vector<std::filesystem::path>& files() const { return files_; }

private:
    void file(const std::string& name, const std::string& content) {
        const auto path = cfg_.out / name;
        std::ofstream os(path, std::ios::binary);
        os << content;
        if (!os) throw Error(ErrorKind::configuration, "cannot write " + path.string());
        files_.push_back(path);
    }

    const ExperimentConfig& cfg_;
    std::vector<std::filesystem::path> files_;
};

// One row per trial; failures become error records.
template <class Trial>
std::vector<json> run_trials(const ExperimentConfig& cfg, std::uint64_t count, std::uint64_t cell, Trial&& trial,
                             std::uint64_t& failures) {
    std::vector<json> rows(count);
    parallel_for(count, cfg.jobs, [&](std::size_t i) {
        const std::uint64_t seed = trial_seed(cfg.seed, cfg.name, cell, i);
        json row{{"trial", i}, {"seed", seed}};
        try {
            trial(i, seed, row);
            row["status"] = "ok";
        } catch (const std::exception& e) {
            row["status"] = "error";
            row["error"] = e.what();
        }
        rows[i] = std::move(row);
    });
    for (const auto& r : rows)
        if (r.at("status") == "error") ++failures;
    return rows;
}

Ordering make_ordering(const std::string& name, std::size_t n, std::uint64_t seed) {
    if (name == "reverse") return Ordering::reverse(n);
    if (name == "random-permutation") return Ordering::random_permutation(n, seed);
    if (name == "source-by-source") return Ordering::source_by_source(n);
    return Ordering::lexicographic(n);
}

std::uint64_t sub(std::uint64_t seed, std::uint64_t key) { return rng::derive(seed, {key}); }

ArwRunResult arw_run(const ExperimentConfig& cfg, const Network& net, const Kernel& kernel, Occupation occ,
                     double sleep_rate, std::uint64_t seed) {
    ArwConfig a;
    a.initial = std::move(occ);
    a.sleep_rate = sleep_rate;
    a.boundary = cfg.boundary;
    a.stop.max_events = cfg.max_events;
    a.seed = seed;
    return simulate(net, kernel, a);
}

void summarize_column(json& summary, const std::vector<json>& rows, const std::string& column) {
    Welford w;
    for (const auto& r : rows)
        if (r.at("status") == "ok" && r.contains(column) && r.at(column).is_number()) w.add(r.at(column).get<double>());
    summary[column] = {{"mean", number(w.mean())}, {"variance", number(w.variance())},
                       {"std_error", number(w.std_error())}, {"count", w.count()}};
}

} // namespace

// ---------------------------------------------------------------- experiments

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    // Everything that can be rejected is rejected before any simulation.
    std::optional<Network> net;
    try {
        net.emplace(build_network(cfg.network));
        (void)build_occupation(cfg.occupation, *net, 0);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::configuration) throw;
        throw Error(ErrorKind::configuration, e.what());
    }
    const Kernel kernel = srw_kernel(*net);
    Writer writer(cfg);
    RunOutcome out;
    json summary{{"kind", to_string(cfg.kind)}, {"name", cfg.name}, {"seed", cfg.seed}, {"trials", cfg.trials}};
    json seeds = json::array();
    Table table;

    switch (cfg.kind) {
    case ExperimentKind::arw: {
        table.columns = {"trial", "seed", "status", "particles", "stabilized", "inconclusive", "events", "hops",
                         "exited", "time", "origin_visits", "event_A_r", "component_size", "error"};
        std::vector<std::vector<json>> hops(cfg.hop_trace ? cfg.trials : 0);
        table.rows = run_trials(cfg, cfg.trials, 0, [&](std::uint64_t trial, std::uint64_t seed, json& row) {
            auto occ = build_occupation(cfg.occupation, *net, sub(seed, 1));
            row["particles"] = occ.total();
            const auto r = arw_run(cfg, *net, kernel, std::move(occ), cfg.sleep_rate, sub(seed, 2));
            if (cfg.hop_trace)
                for (VertexId v = 0; v < r.traces.size(); ++v)
                    for (std::size_t i = 0; i < r.traces[v].size(); ++i)
                        hops[trial].push_back({{"trial", trial}, {"source", v}, {"hop_index", i},
                                               {"destination", r.traces[v][i].to}, {"time", r.traces[v][i].time}});
            row["stabilized"] = r.stabilized;
            row["inconclusive"] = r.inconclusive;
            row["events"] = r.events;
            row["hops"] = r.hops;
            row["exited"] = r.exited;
            row["time"] = r.time;
            row["origin_visits"] = r.visits[r.origin];
            row["event_A_r"] = visits(r, r.origin, cfg.visits_at_least);
            row["component_size"] = r.origin_component.size();
        }, out.failed_trials);
        std::uint64_t stabilized = 0, hits = 0, ok = 0;
        for (const auto& r : table.rows) {
            if (r.at("status") != "ok") continue;
            ++ok;
            stabilized += r.at("stabilized").get<bool>();
            hits += r.at("event_A_r").get<bool>();
        }
        summary["stabilized"] = stabilized;
        summary["visits_at_least"] = cfg.visits_at_least;
        summary["event_A_r_frequency"] = ok ? number(static_cast<double>(hits) / static_cast<double>(ok)) : json(nullptr);
        for (const char* c : {"origin_visits", "component_size", "hops"}) summarize_column(summary, table.rows, c);
        if (cfg.hop_trace) {
            Table trace;
            trace.columns = {"trial", "source", "hop_index", "destination", "time"};
            for (auto& h : hops) std::move(h.begin(), h.end(), std::back_inserter(trace.rows));
            writer.table("hop_trace", trace);
        }
        break;
    }
    case ExperimentKind::msia: {
        table.columns = {"trial", "seed", "status", "explorers", "occupied", "exited", "origin_visits", "total_steps",
                         "inconclusive", "abelian", "error"};
        table.rows = run_trials(cfg, cfg.trials, 0, [&](std::uint64_t, std::uint64_t seed, json& row) {
            const auto occ = build_occupation(cfg.occupation, *net, sub(seed, 1));
            const auto order = make_ordering(cfg.ordering, net->size(), sub(seed, 3));
            InstructionStacks stacks(kernel, sub(seed, 2));
            const auto r = run_msia(*net, occ, order, stacks);
            row["explorers"] = occ.total();
            row["occupied"] = r.occupied.size();
            row["exited"] = r.exited;
            row["origin_visits"] = r.visits[net->origin()];
            row["total_steps"] = r.total_steps;
            row["inconclusive"] = r.inconclusive;
            if (cfg.compare_ordering) {
                const auto other = make_ordering(*cfg.compare_ordering, net->size(), sub(seed, 4));
                const auto same = abelian_check(*net, kernel, occ, sub(seed, 2), order, other);
                row["abelian"] = same ? json(*same) : json(nullptr);
            }
        }, out.failed_trials);
        std::uint64_t agree = 0, checked = 0;
        for (const auto& r : table.rows)
            if (r.contains("abelian") && r.at("abelian").is_boolean()) {
                ++checked;
                agree += r.at("abelian").get<bool>();
            }
        if (cfg.compare_ordering) summary["abelian"] = {{"checked", checked}, {"agree", agree}};
        for (const char* c : {"origin_visits", "exited", "total_steps"}) summarize_column(summary, table.rows, c);
        break;
    }
    case ExperimentKind::couple: {
        table.columns = {"trial", "seed", "status", "particles", "explorers", "stabilized", "success",
                         "inconclusive", "moves", "exited", "error"};
        table.rows = run_trials(cfg, cfg.trials, 0, [&](std::uint64_t, std::uint64_t seed, json& row) {
            const auto eta = build_occupation(cfg.occupation, *net, sub(seed, 1));
            std::vector<std::uint32_t> g(eta.size(), 0);
            for (VertexId v = 0; v < eta.size(); ++v) {
                rng::Stream s(sub(seed, 3), rng::Tag::trial, {v});
                for (std::uint32_t k = 0; k < eta[v]; ++k) g[v] += s.uniform() < cfg.gamma_fraction;
            }
            const Occupation gamma(std::move(g), {"thinning", {{"fraction", cfg.gamma_fraction}}, sub(seed, 3)});
            const auto r = arw_run(cfg, *net, kernel, eta, cfg.sleep_rate, sub(seed, 2));
            const auto rep = coupled_replay(*net, r, gamma, eta);
            row["particles"] = eta.total();
            row["explorers"] = gamma.total();
            row["stabilized"] = r.stabilized;
            row["success"] = rep.success;
            row["inconclusive"] = rep.inconclusive;
            row["moves"] = rep.moves;
            row["exited"] = rep.exited;
        }, out.failed_trials);
        std::uint64_t success = 0, inconclusive = 0;
        for (const auto& r : table.rows) {
            if (r.at("status") != "ok") continue;
            success += r.at("success").get<bool>();
            inconclusive += r.at("inconclusive").get<bool>();
        }
        summary["success"] = success;
        summary["inconclusive"] = inconclusive;
        summary["label"] = "evidence: domination checked on finite runs";
        break;
    }
    case ExperimentKind::criterion: {
        table.columns = {"m", "region_size", "lambda", "omega", "delta", "ratio", "green_origin", "exit_time",
                         "residual"};
        const std::uint64_t seed = trial_seed(cfg.seed, cfg.name, 0, 0);
        seeds.push_back(seed);
        const auto occ = build_occupation(cfg.occupation, *net, sub(seed, 1));
        const auto series = criterion_series(occ, *net, kernel, cfg.schedule, net->origin(), cfg.region_metric);
        for (const auto& r : series.rows)
            table.rows.push_back({{"m", r.m}, {"region_size", r.region_size}, {"lambda", r.lambda},
                                  {"omega", r.omega}, {"delta", r.delta}, {"ratio", r.ratio},
                                  {"green_origin", r.green_origin}, {"exit_time", r.exit_time},
                                  {"residual", r.residual}});
        summary["verdict"] = {{"label", series.verdict.label},
                              {"trend_positive", series.verdict.trend_positive},
                              {"growth_exponent", series.verdict.growth_exponent
                                                      ? number(*series.verdict.growth_exponent)
                                                      : json(nullptr)},
                              {"threshold", trend_exponent_threshold}};
        break;
    }
    case ExperimentKind::animals: {
        table.columns = {"trial", "seed", "status", "threshold", "threshold_exceeds_n_max",
                         "threshold_lower_bound_only", "density_max", "tail_slope", "error"};
        std::vector<json> reports(cfg.trials);
        AnimalOptions opt;
        opt.exact_cap = cfg.exact_cap;
        table.rows = run_trials(cfg, cfg.trials, 0, [&](std::uint64_t i, std::uint64_t seed, json& row) {
            const auto occ = build_occupation(cfg.occupation, *net, sub(seed, 1));
            const auto rep = threshold_A(occ, *net, net->origin(), cfg.n_max, opt);
            row["threshold"] = rep.threshold;
            row["threshold_exceeds_n_max"] = rep.unbounded;
            row["threshold_lower_bound_only"] = rep.lower_bound_only;
            row["density_max"] = rep.density_max;
            row["tail_slope"] = rep.tail_slope ? json(*rep.tail_slope) : json(nullptr);
            reports[i] = to_json(rep);
        }, out.failed_trials);
        if (!reports.empty() && !reports[0].is_null()) {
            summary["first_trial_report"] = reports[0];
            Table t{{"n", "W", "method"}, {}};
            for (const auto& r : reports[0].at("table")) t.rows.push_back(r);
            writer.table("animal_table", t);
        }
        summarize_column(summary, table.rows, "threshold");
        break;
    }
    case ExperimentKind::sweep: {
        const auto mus = cfg.grid.mu.empty() ? std::vector<double>{std::nan("")} : cfg.grid.mu;
        const auto lambdas = cfg.grid.lambda.empty() ? std::vector<double>{cfg.sleep_rate} : cfg.grid.lambda;
        std::vector<int> ms = cfg.grid.m;
        if (ms.empty()) ms.push_back(cfg.network.contains("lattice") ? cfg.network["lattice"].value("m", 0) : 0);

        struct Cell {
            double mu, lambda;
            int m;
        };
        std::vector<Cell> cells;
        for (double mu : mus)
            for (double lambda : lambdas)
                for (int m : ms) cells.push_back({mu, lambda, m});

        // Networks per distinct radius, built up front.
        std::map<int, std::pair<Network, Kernel>> nets;
        for (int m : ms) {
            if (nets.contains(m)) continue;
            json spec = cfg.network;
            if (m > 0) spec["lattice"]["m"] = m;
            Network n = build_network(spec);
            Kernel k = srw_kernel(n);
            nets.emplace(m, std::pair{std::move(n), std::move(k)});
        }

        table.columns = {"mu", "lambda", "m", "trials", "failures", "frequency", "std_error", "mean_origin_visits",
                         "var_origin_visits"};
        Table log{{"cell", "trial", "seed", "status", "origin_visits", "hit", "stabilized", "error"}, {}};
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const auto& cell = cells[ci];
            json occ_spec = cfg.occupation;
            if (!std::isnan(cell.mu)) {
                auto& pmf = occ_spec["pmf"];
                pmf[pmf.at("type") == "poisson" ? "mean" : "p"] = cell.mu;
            }
            const auto& [cnet, ckernel] = nets.at(cell.m);
            json cell_seeds = json::array();
            auto rows = run_trials(cfg, cfg.trials, ci, [&](std::uint64_t, std::uint64_t seed, json& row) {
                auto occ = build_occupation(occ_spec, cnet, sub(seed, 1));
                const auto r = arw_run(cfg, cnet, ckernel, std::move(occ), cell.lambda, sub(seed, 2));
                row["origin_visits"] = r.visits[r.origin];
                row["hit"] = visits(r, r.origin, cfg.grid.visits_at_least);
                row["stabilized"] = r.stabilized;
            }, out.failed_trials);
            Welford freq, vis;
            std::uint64_t failures = 0;
            for (auto& r : rows) {
                cell_seeds.push_back(r.at("seed"));
                r["cell"] = ci;
                if (r.at("status") != "ok") {
                    ++failures;
                } else {
                    freq.add(r.at("hit").get<bool>() ? 1.0 : 0.0);
                    vis.add(r.at("origin_visits").get<double>());
                }
                log.rows.push_back(r);
            }
            seeds.push_back(cell_seeds);
            table.rows.push_back({{"mu", std::isnan(cell.mu) ? json(nullptr) : json(cell.mu)},
                                  {"lambda", number(cell.lambda)},
                                  {"m", cell.m},
                                  {"trials", cfg.trials},
                                  {"failures", failures},
                                  {"frequency", freq.mean()},
                                  {"std_error", freq.std_error()},
                                  {"mean_origin_visits", vis.mean()},
                                  {"var_origin_visits", vis.variance()}});
        }
        writer.table("trials", log);
        summary["cells"] = cells.size();
        summary["visits_at_least"] = cfg.grid.visits_at_least;
        summary["label"] = "evidence: finite-window frequencies";
        break;
    }
    }

    if (cfg.kind != ExperimentKind::criterion && cfg.kind != ExperimentKind::sweep)
        for (const auto& r : table.rows) seeds.push_back(r.at("seed"));
    writer.table("results", table);
    summary["failed_trials"] = out.failed_trials;
    writer.document("summary.json", summary);

    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg.document)));
    json files = json::array();
    for (const auto& f : writer.files()) files.push_back(f.filename().string());
    json manifest{{"version", version},
                  {"kind", to_string(cfg.kind)},
                  {"name", cfg.name},
                  {"config", cfg.document},
                  {"config_hash", hash},
                  {"master_seed", cfg.seed},
                  {"trial_seeds", seeds},
                  {"seed_derivation", "hash(master seed, experiment name, cell, trial)"},
                  {"files", files}};
    writer.document("manifest.json", manifest);

    out.files = writer.files();
    out.summary = std::move(summary);
    out.exit_code = out.failed_trials ? 3 : 0;
    return out;
}

} // namespace arwlab
