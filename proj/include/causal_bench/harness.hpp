#ifndef CAUSAL_BENCH_HARNESS_HPP
#define CAUSAL_BENCH_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "dataio.hpp"
#include "fges.hpp"
#include "metrics.hpp"
#include "pc.hpp"
#include "rng.hpp"
#include "score.hpp"
#include "simulate.hpp"

namespace causal_bench {

namespace fs = std::filesystem;

struct Cell {
    int vars = 0;
    int deg = 0;
    int n = 0;
    auto operator<=>(const Cell&) const = default;
};

inline std::string cell_dir_name(const Cell& c) {
    return "vars" + std::to_string(c.vars) + "_deg" + std::to_string(c.deg) + "_n" + std::to_string(c.n);
}

inline std::vector<Cell> grid(const std::vector<int>& vars, const std::vector<int>& degs, const std::vector<int>& ns) {
    std::vector<Cell> cells;
    for (int v : vars)
        for (int d : degs)
            for (int n : ns)
                cells.push_back({v, d, n});
    return cells;
}

inline std::vector<Cell> default_cells() { return grid({50, 100, 500}, {2, 4, 6}, {100, 500, 1000}); }

// ---------------------------------------------------------------------------
// Algorithm specifications: "name:key=value,key=value".
// ---------------------------------------------------------------------------

struct AlgorithmSpec {
    int id = 0;
    std::string name;
    std::vector<std::pair<std::string, std::string>> params;  // canonical order

    std::string param(const std::string& key) const {
        for (const auto& [k, v] : params)
            if (k == key)
                return v;
        throw std::out_of_range("algorithm " + name + " has no parameter " + key);
    }

    std::string to_string() const {
        std::string s = name;
        for (std::size_t i = 0; i < params.size(); ++i)
            s += (i ? "," : ":") + params[i].first + "=" + params[i].second;
        return s;
    }

    AlgorithmEntry entry() const { return {id, name, params}; }
    friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;
};

namespace detail {

inline bool is_pc_family(const std::string& name) {
    return name == "pc" || name == "pc-stable" || name == "pc-stable-max" || name == "cpc" || name == "cpc-stable";
}

inline double parse_real_param(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used == v.size())
            return x;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("parameter " + key + " expects a number, got '" + v + "'");
}

inline bool parse_bool_param(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1")
        return true;
    if (v == "false" || v == "0")
        return false;
    throw std::invalid_argument("parameter " + key + " expects true or false, got '" + v + "'");
}

inline int parse_int_param(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        int x = std::stoi(v, &used);
        if (used == v.size())
            return x;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("parameter " + key + " expects an integer, got '" + v + "'");
}

}  // namespace detail

/// Parses and normalizes one specification, filling defaults. Numbers are
/// re-rendered so "0.010" and "0.01" name the same variant.
inline AlgorithmSpec parse_algorithm_spec(const std::string& text, int id = 0) {
    auto colon = text.find(':');
    std::string name = detail::trim(text.substr(0, colon));
    std::map<std::string, std::string> given;
    if (colon != std::string::npos) {
        for (const auto& item : detail::split(text.substr(colon + 1), ',')) {
            std::string kv = detail::trim(item);
            if (kv.empty())
                continue;
            auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0)
                throw std::invalid_argument("expected key=value in '" + text + "', got '" + kv + "'");
            if (!given.emplace(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1))).second)
                throw std::invalid_argument("parameter repeated in '" + text + "'");
        }
    }
    auto take = [&](const std::string& key, const std::string& fallback) {
        auto it = given.find(key);
        std::string v = it == given.end() ? fallback : it->second;
        if (it != given.end())
            given.erase(it);
        return v;
    };
    auto alpha_of = [&](const std::string& v) {
        double a = detail::parse_real_param("alpha", v);
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument("alpha must lie in (0, 1)");
        return format_decimal(a);
    };

    AlgorithmSpec spec;
    spec.id = id;
    spec.name = name;
    if (detail::is_pc_family(name)) {
        spec.params.emplace_back("alpha", alpha_of(take("alpha", "0.01")));
        spec.params.emplace_back("conflict", to_string(parse_conflict_rule(take("conflict", "priority"))));
    } else if (name == "fges") {
        std::string score = take("score", "sem-bic");
        spec.params.emplace_back("score", score);
        if (score == "sem-bic") {
            double c = detail::parse_real_param("penalty", take("penalty", "2"));
            if (!(c > 0.0))
                throw std::invalid_argument("penalty must be positive");
            spec.params.emplace_back("penalty", format_decimal(c));
        } else if (score == "fisher-z") {
            spec.params.emplace_back("alpha", alpha_of(take("alpha", "0.001")));
        } else {
            throw std::invalid_argument("unknown fges score '" + score + "' (expected sem-bic or fisher-z)");
        }
        bool faithful = detail::parse_bool_param("faithfulness", take("faithfulness", "false"));
        spec.params.emplace_back("faithfulness", faithful ? "true" : "false");
        int workers = detail::parse_int_param("workers", take("workers", "1"));
        if (workers < 1)
            throw std::invalid_argument("workers must be at least 1");
        spec.params.emplace_back("workers", std::to_string(workers));
    } else {
        throw std::invalid_argument("unknown algorithm '" + name + "'");
    }
    if (!given.empty())
        throw std::invalid_argument("unknown parameter '" + given.begin()->first + "' for " + name);
    return spec;
}

/// Twenty reference variants with fixed ids 1 to 20.
inline std::vector<AlgorithmSpec> standard_algorithms() {
    std::vector<std::string> texts;
    for (const char* pc : {"pc", "pc-stable", "pc-stable-max", "cpc", "cpc-stable"})
        for (const char* a : {"0.01", "0.001"})
            texts.push_back(std::string(pc) + ":alpha=" + a);
    for (const char* faith : {"false", "true"}) {
        for (const char* a : {"0.001", "0.0001", "1e-08"})
            texts.push_back(std::string("fges:score=fisher-z,alpha=") + a + ",faithfulness=" + faith);
        for (const char* c : {"2", "4"})
            texts.push_back(std::string("fges:score=sem-bic,penalty=") + c + ",faithfulness=" + faith);
    }
    std::vector<AlgorithmSpec> out;
    for (std::size_t i = 0; i < texts.size(); ++i)
        out.push_back(parse_algorithm_spec(texts[i], static_cast<int>(i + 1)));
    return out;
}

/// Specs separated by ';'; "standard" expands to the twenty variants. Ids
/// continue from `first_id` in order of appearance.
inline std::vector<AlgorithmSpec> parse_algorithm_list(const std::string& text, int first_id = 1) {
    std::vector<AlgorithmSpec> out;
    for (const auto& item : detail::split(text, ';')) {
        std::string t = detail::trim(item);
        if (t.empty())
            continue;
        if (t == "standard") {
            for (auto spec : standard_algorithms()) {
                spec.id = first_id + static_cast<int>(out.size());
                out.push_back(std::move(spec));
            }
        } else {
            out.push_back(parse_algorithm_spec(t, first_id + static_cast<int>(out.size())));
        }
    }
    return out;
}

inline PcVariant pc_variant_of(const AlgorithmSpec& spec) {
    double alpha = std::stod(spec.param("alpha"));
    PcVariant v = spec.name == "pc"              ? PcVariant::pc(alpha)
                  : spec.name == "pc-stable"     ? PcVariant::pc_stable(alpha)
                  : spec.name == "pc-stable-max" ? PcVariant::pc_stable_max(alpha)
                  : spec.name == "cpc"           ? PcVariant::cpc(alpha)
                  : spec.name == "cpc-stable"    ? PcVariant::cpc_stable(alpha)
                                                 : throw std::invalid_argument("not a PC variant: " + spec.name);
    v.conflict = parse_conflict_rule(spec.param("conflict"));
    return v;
}

/// Runs one algorithm on one dataset; returns the estimated pattern.
inline MixedGraph run_algorithm(const AlgorithmSpec& spec, const DataSet& data) {
    if (detail::is_pc_family(spec.name))
        return run_pc(pc_variant_of(spec), data);
    if (spec.name != "fges")
        throw std::invalid_argument("unknown algorithm '" + spec.name + "'");
    auto corr = std::make_shared<const CorrMatrix>(correlation_matrix(data));
    FgesConfig config{
        spec.param("score") == "sem-bic" ? ScoreKind(SemBicScore(corr, std::stod(spec.param("penalty"))))
                                         : ScoreKind(FisherZScore(corr, std::stod(spec.param("alpha")))),
        spec.param("faithfulness") == "true", std::stoi(spec.param("workers"))};
    return fges_search(config);
}

// ---------------------------------------------------------------------------
// Run matrix configuration.
//
// Key-value text, one "key = value" per line, '#' comments:
//   seed       = 64-bit master seed           (CAUSAL_BENCH_SEED overrides)
//   runs       = datasets per cell            (default 10)
//   vars       = 50, 100, 500                 levels crossed into cells
//   deg        = 2, 4, 6
//   n          = 100, 500, 1000
//   cell       = 50 2 1000                    repeatable; replaces the grid
//   algorithm  = pc-stable:alpha=0.01         repeatable; "standard" for all 20
//   timeout    = 600                          seconds per run
//   workers    = 1                            concurrent runs
//   output     = corpus                       corpus directory for simulate
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kDefaultMasterSeed = 20171201;

struct RunMatrixConfig {
    std::vector<Cell> cells = default_cells();
    int runs = 10;
    std::vector<AlgorithmSpec> algorithms;
    double timeout_s = 600.0;
    std::uint64_t master_seed = kDefaultMasterSeed;
    int workers = 1;
    fs::path output_dir = "corpus";
};

inline std::uint64_t parse_seed(const std::string& text) {
    try {
        std::size_t used = 0;
        auto s = std::stoull(text, &used, 0);
        if (used == text.size() && text.find('-') == std::string::npos)
            return s;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("seed must be an unsigned 64-bit integer, got '" + text + "'");
}

/// Replaces the master seed when CAUSAL_BENCH_SEED is set.
inline void apply_environment(RunMatrixConfig& config) {
    if (const char* s = std::getenv("CAUSAL_BENCH_SEED"); s && *s)
        config.master_seed = parse_seed(s);
}

inline RunMatrixConfig parse_run_config(std::istream& in, const std::string& source = "<config>") {
    RunMatrixConfig c;
    std::vector<int> vars{50, 100, 500}, degs{2, 4, 6}, ns{100, 500, 1000};
    std::vector<Cell> explicit_cells;
    std::string algs;
    std::string line;
    std::size_t lineno = 0;
    auto int_list = [&](const std::string& v) {
        std::vector<int> out;
        std::string norm = v;
        std::replace(norm.begin(), norm.end(), ',', ' ');
        std::istringstream s(norm);
        for (std::string tok; s >> tok;)
            out.push_back(detail::parse_int(tok, source, lineno));
        if (out.empty())
            throw ParseError(source, lineno, "empty list");
        return out;
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line.substr(0, line.find('#')));
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(source, lineno, "expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        try {
            if (key == "seed") {
                c.master_seed = parse_seed(value);
            } else if (key == "runs") {
                c.runs = detail::parse_int(value, source, lineno);
            } else if (key == "vars") {
                vars = int_list(value);
            } else if (key == "deg") {
                degs = int_list(value);
            } else if (key == "n") {
                ns = int_list(value);
            } else if (key == "cell") {
                auto v = int_list(value);
                if (v.size() != 3)
                    throw ParseError(source, lineno, "cell takes vars, deg and n");
                explicit_cells.push_back({v[0], v[1], v[2]});
            } else if (key == "algorithm") {
                parse_algorithm_list(value);
                algs += value + ";";
            } else if (key == "timeout") {
                c.timeout_s = detail::parse_double(value, source, lineno);
            } else if (key == "workers") {
                c.workers = detail::parse_int(value, source, lineno);
            } else if (key == "output") {
                c.output_dir = value;
            } else {
                throw ParseError(source, lineno, "unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    c.cells = explicit_cells.empty() ? grid(vars, degs, ns) : explicit_cells;
    c.algorithms = parse_algorithm_list(algs);
    if (c.runs < 1)
        throw ParseError(source, lineno, "runs must be at least 1");
    if (c.workers < 1)
        throw ParseError(source, lineno, "workers must be at least 1");
    if (!(c.timeout_s > 0.0))
        throw ParseError(source, lineno, "timeout must be positive");
    return c;
}

inline RunMatrixConfig load_run_config(const fs::path& path) {
    auto in = detail::open_in(path);
    auto c = parse_run_config(in, path.string());
    apply_environment(c);
    return c;
}

// ---------------------------------------------------------------------------
// Corpus: corpus/vars{V}_deg{D}_n{N}/run{R}/{data.txt, graph.txt}
// ---------------------------------------------------------------------------

struct CorpusEntry {
    Cell cell;
    int run = 0;
    fs::path dir;
};

struct SimulatedDataset {
    Dag truth;
    DataSet data;  // columns shuffled
};

inline SimulatedDataset simulate_dataset(const Cell& cell, int run, std::uint64_t master_seed,
                                         const ParamRanges& ranges = {}) {
    Rng rng(derive_seed(master_seed, {static_cast<std::uint64_t>(cell.vars), static_cast<std::uint64_t>(cell.deg),
                                      static_cast<std::uint64_t>(cell.n), static_cast<std::uint64_t>(run)}));
    Dag dag = random_dag(cell.vars, cell.deg, rng);
    SemModel model = draw_params(dag, rng, ranges);
    DataSet data = simulate_recursive(model, cell.n, rng);
    return {std::move(dag), shuffle_columns(data, rng).data};
}

inline std::vector<CorpusEntry> generate_corpus(const RunMatrixConfig& config, const fs::path& dir) {
    std::vector<CorpusEntry> out;
    for (const Cell& cell : config.cells)
        for (int run = 0; run < config.runs; ++run) {
            auto sim = simulate_dataset(cell, run, config.master_seed);
            fs::path d = dir / cell_dir_name(cell) / ("run" + std::to_string(run));
            write_dataset(d / "data.txt", sim.data);
            write_graph(d / "graph.txt", sim.truth.graph());
            out.push_back({cell, run, d});
        }
    return out;
}

/// Datasets under `dir`, sorted by cell and run.
inline std::vector<CorpusEntry> scan_corpus(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw std::runtime_error("corpus directory " + dir.string() + " does not exist");
    static const std::regex cell_re(R"(vars(\d+)_deg(\d+)_n(\d+))");
    static const std::regex run_re(R"(run(\d+))");
    std::vector<CorpusEntry> out;
    for (const auto& c : fs::directory_iterator(dir)) {
        std::smatch m;
        std::string cname = c.path().filename().string();
        if (!c.is_directory() || !std::regex_match(cname, m, cell_re))
            continue;
        Cell cell{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
        for (const auto& r : fs::directory_iterator(c.path())) {
            std::smatch rm;
            std::string rname = r.path().filename().string();
            if (r.is_directory() && std::regex_match(rname, rm, run_re) && fs::exists(r.path() / "data.txt"))
                out.push_back({cell, std::stoi(rm[1]), r.path()});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const CorpusEntry& a, const CorpusEntry& b) { return std::tie(a.cell, a.run) < std::tie(b.cell, b.run); });
    return out;
}

// ---------------------------------------------------------------------------
// Run matrix. Each run is a forked child process so a run over its time
// budget can be killed. The child times the algorithm call alone.
//
// results/
//   algorithms.txt                      id <tab> spec
//   records.tsv                         one line per run
//   graphs/alg{A}/<cell>/run{R}.txt     estimated graph
//   elapsed/alg{A}/<cell>/run{R}.txt    seconds
// ---------------------------------------------------------------------------

enum class RunStatus { Ok, Timeout, Error };

inline std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Ok:
            return "OK";
        case RunStatus::Timeout:
            return "TIMEOUT";
        case RunStatus::Error:
            return "ERROR";
    }
    return "ERROR";
}

inline RunStatus parse_run_status(const std::string& s) {
    if (s == "OK")
        return RunStatus::Ok;
    if (s == "TIMEOUT")
        return RunStatus::Timeout;
    if (s == "ERROR")
        return RunStatus::Error;
    throw std::invalid_argument("unknown run status '" + s + "'");
}

struct RunRecord {
    int alg_id = 0;
    Cell cell;
    int run = 0;
    RunStatus status = RunStatus::Error;
    double elapsed_s = 0.0;
    fs::path graph;  // relative to the results directory; empty unless OK
    fs::path truth;
    std::string message;
};

struct RunOptions {
    double timeout_s = 600.0;
    int workers = 1;
};

namespace detail {

inline fs::path run_file(const char* kind, int alg, const Cell& cell, int run) {
    return fs::path(kind) / ("alg" + std::to_string(alg)) / cell_dir_name(cell) / ("run" + std::to_string(run) + ".txt");
}

inline std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\t', ' ');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

[[noreturn]] inline void child_main(const AlgorithmSpec& spec, const CorpusEntry& entry, const fs::path& results,
                                    const fs::path& error_file) {
    int code = 0;
    try {
        DataSet data = read_dataset(entry.dir / "data.txt");
        auto start = std::chrono::steady_clock::now();
        MixedGraph est = run_algorithm(spec, data);
        double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_graph(results / run_file("graphs", spec.id, entry.cell, entry.run), est);
        auto out = open_out(results / run_file("elapsed", spec.id, entry.cell, entry.run));
        out << format_decimal(elapsed) << '\n';
    } catch (const std::exception& e) {
        std::ofstream err(error_file);
        err << one_line(e.what());
        code = 2;
    } catch (...) {
        code = 3;
    }
    _exit(code);
}

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace detail

inline void write_algorithms(const fs::path& path, const std::vector<AlgorithmSpec>& algs) {
    auto out = detail::open_out(path);
    for (const auto& a : algs)
        out << a.id << '\t' << a.to_string() << '\n';
}

inline std::vector<AlgorithmSpec> read_algorithms(const fs::path& path) {
    auto in = detail::open_in(path);
    std::vector<AlgorithmSpec> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty())
            continue;
        auto f = detail::split(line, '\t');
        if (f.size() != 2)
            throw ParseError(path.string(), lineno, "expected id and specification");
        try {
            out.push_back(parse_algorithm_spec(f[1], detail::parse_int(f[0], path.string(), lineno)));
        } catch (const std::invalid_argument& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

inline const char* kRecordsHeader = "alg\tvars\tdeg\tn\trun\tstatus\telapsed\tgraph\ttruth\tmessage";

inline void write_records(const fs::path& path, const std::vector<RunRecord>& records) {
    auto out = detail::open_out(path);
    out << kRecordsHeader << '\n';
    for (const auto& r : records)
        out << r.alg_id << '\t' << r.cell.vars << '\t' << r.cell.deg << '\t' << r.cell.n << '\t' << r.run << '\t'
            << to_string(r.status) << '\t' << format_decimal(r.elapsed_s) << '\t' << r.graph.generic_string() << '\t'
            << r.truth.generic_string() << '\t' << detail::one_line(r.message) << '\n';
}

inline std::vector<RunRecord> read_records(const fs::path& path) {
    auto in = detail::open_in(path);
    const std::string src = path.string();
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || (detail::strip_cr(line), line) != kRecordsHeader)
        throw ParseError(src, lineno, "unexpected header");
    std::vector<RunRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty())
            continue;
        auto f = detail::split(line, '\t');
        if (f.size() != 10)
            throw ParseError(src, lineno, "expected 10 columns");
        RunRecord r;
        r.alg_id = detail::parse_int(f[0], src, lineno);
        r.cell = {detail::parse_int(f[1], src, lineno), detail::parse_int(f[2], src, lineno),
                  detail::parse_int(f[3], src, lineno)};
        r.run = detail::parse_int(f[4], src, lineno);
        try {
            r.status = parse_run_status(f[5]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(src, lineno, e.what());
        }
        r.elapsed_s = detail::parse_double(f[6], src, lineno);
        r.graph = f[7];
        r.truth = f[8];
        r.message = f[9];
        out.push_back(std::move(r));
    }
    return out;
}

/// Runs every algorithm on every dataset of the corpus, at most
/// `options.workers` at a time. Writes graphs, timings, algorithms.txt and
/// records.tsv under `results`. Failures are recorded, never thrown.
inline std::vector<RunRecord> run_matrix(const std::vector<AlgorithmSpec>& algorithms,
                                         const std::vector<CorpusEntry>& corpus, const fs::path& results,
                                         const RunOptions& options) {
    if (options.workers < 1)
        throw std::invalid_argument("workers must be at least 1");
    if (!(options.timeout_s > 0.0))
        throw std::invalid_argument("timeout must be positive");
    std::set<int> ids;
    for (const auto& a : algorithms)
        if (!ids.insert(a.id).second)
            throw std::invalid_argument("duplicate algorithm id " + std::to_string(a.id));
    fs::create_directories(results);
    write_algorithms(results / "algorithms.txt", algorithms);
    fs::path scratch = results / "errors";
    fs::create_directories(scratch);

    struct Job {
        const AlgorithmSpec* alg;
        const CorpusEntry* entry;
    };
    std::vector<Job> jobs;
    for (const auto& a : algorithms)
        for (const auto& e : corpus)
            jobs.push_back({&a, &e});
    std::vector<RunRecord> records(jobs.size());

    struct Active {
        pid_t pid;
        std::size_t job;
        std::chrono::steady_clock::time_point start;
    };
    std::vector<Active> active;
    const auto budget = std::chrono::duration<double>(options.timeout_s);
    const auto poll = std::chrono::duration<double>(std::clamp(options.timeout_s / 20.0, 1e-4, 0.01));
    auto error_file = [&](std::size_t j) { return scratch / ("job" + std::to_string(j) + ".txt"); };

    auto finish = [&](const Active& a, RunStatus status, std::string message) {
        const Job& job = jobs[a.job];
        RunRecord& r = records[a.job];
        r.alg_id = job.alg->id;
        r.cell = job.entry->cell;
        r.run = job.entry->run;
        r.truth = fs::absolute(job.entry->dir / "graph.txt");
        r.status = status;
        r.message = std::move(message);
        fs::path graph = detail::run_file("graphs", r.alg_id, r.cell, r.run);
        fs::path elapsed = detail::run_file("elapsed", r.alg_id, r.cell, r.run);
        if (status == RunStatus::Ok) {
            r.graph = graph;
            try {
                r.elapsed_s = std::stod(detail::read_text(results / elapsed));
            } catch (const std::exception&) {
                r.status = RunStatus::Error;
                r.message = "run finished without a timing file";
            }
        } else {
            std::error_code ec;
            fs::remove(results / graph, ec);
            fs::remove(results / elapsed, ec);
            r.elapsed_s = status == RunStatus::Timeout ? options.timeout_s : 0.0;
        }
        if (r.status != RunStatus::Ok)
            r.graph.clear();
    };

    std::size_t next = 0;
    while (next < jobs.size() || !active.empty()) {
        while (next < jobs.size() && static_cast<int>(active.size()) < options.workers) {
            std::error_code ec;
            fs::remove(error_file(next), ec);
            pid_t pid = fork();
            if (pid < 0)
                throw std::runtime_error("fork failed");
            if (pid == 0)
                detail::child_main(*jobs[next].alg, *jobs[next].entry, results, error_file(next));
            active.push_back({pid, next, std::chrono::steady_clock::now()});
            ++next;
        }
        std::this_thread::sleep_for(poll);
        for (std::size_t i = 0; i < active.size();) {
            Active a = active[i];
            int status = 0;
            pid_t done = waitpid(a.pid, &status, WNOHANG);
            bool finished = true;
            if (done == a.pid) {
                if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
                    finish(a, RunStatus::Ok, "");
                } else {
                    std::string msg = detail::read_text(error_file(a.job));
                    if (msg.empty())
                        msg = WIFSIGNALED(status) ? "terminated by signal " + std::to_string(WTERMSIG(status))
                                                  : "exit code " + std::to_string(WEXITSTATUS(status));
                    finish(a, RunStatus::Error, msg);
                }
            } else if (std::chrono::steady_clock::now() - a.start > budget) {
                kill(a.pid, SIGKILL);
                waitpid(a.pid, &status, 0);
                finish(a, RunStatus::Timeout, "");
            } else {
                finished = false;
            }
            if (finished) {
                std::error_code ec;
                fs::remove(error_file(a.job), ec);
                active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
            } else {
                ++i;
            }
        }
    }
    std::error_code ec;
    fs::remove_all(scratch, ec);
    write_records(results / "records.tsv", records);
    return records;
}

// ---------------------------------------------------------------------------
// Aggregation over runs.
// ---------------------------------------------------------------------------

/// Mean and sample standard deviation of the defined values. Empty input
/// gives nothing; a single value has standard deviation 0.
inline std::optional<std::pair<double, double>> mean_and_std(const std::vector<double>& xs) {
    if (xs.empty())
        return std::nullopt;
    double mean = 0.0;
    for (double x : xs)
        mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1)
        return std::pair{mean, 0.0};
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

/// Table statistics of one OK run, in column order; E last.
inline std::array<std::optional<double>, 7> run_statistics(const Dag& truth, const MixedGraph& est, double elapsed) {
    GraphStats s = graph_stats(truth, est);
    return {s.ap, s.ar, s.ahp, s.ahr, s.mcadj, s.mcarrow, elapsed};
}

struct Aggregate {
    StatsTable means;
    StatsTable stds;
    ConfigManifest manifest;
};

/// Groups records by (algorithm, cell) in id and cell order.
inline Aggregate aggregate(const std::vector<RunRecord>& records, const std::vector<AlgorithmSpec>& algorithms,
                           const fs::path& results) {
    std::map<std::pair<int, Cell>, std::vector<const RunRecord*>> groups;
    std::set<int> vars, degs, ns;
    for (const auto& r : records) {
        groups[{r.alg_id, r.cell}].push_back(&r);
        vars.insert(r.cell.vars);
        degs.insert(r.cell.deg);
        ns.insert(r.cell.n);
    }
    std::map<fs::path, Dag> truths;
    Aggregate out;
    int max_runs = 0;
    for (const auto& [key, group] : groups) {
        max_runs = std::max(max_runs, static_cast<int>(group.size()));
        std::array<std::vector<double>, 7> values;
        bool any_ok = false;
        for (const RunRecord* r : group) {
            if (r->status != RunStatus::Ok)
                continue;
            any_ok = true;
            fs::path gp = results / r->graph;
            if (r->graph.empty() || !fs::exists(gp))
                throw std::runtime_error("missing estimated graph for algorithm " + std::to_string(r->alg_id) +
                                         ", " + cell_dir_name(r->cell) + ", run " + std::to_string(r->run));
            auto it = truths.find(r->truth);
            if (it == truths.end())
                it = truths.emplace(r->truth, Dag(read_graph(r->truth))).first;
            auto stats = run_statistics(it->second, read_graph(gp), r->elapsed_s);
            for (std::size_t k = 0; k < stats.size(); ++k)
                if (stats[k])
                    values[k].push_back(*stats[k]);
        }
        StatRow mean{key.first, key.second.vars, key.second.deg, key.second.n, {}};
        StatRow sd = mean;
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (!any_ok) {
                mean.stats[k] = sd.stats[k] = StatValue::missing();
            } else if (auto ms = mean_and_std(values[k])) {
                mean.stats[k] = StatValue::of(ms->first);
                sd.stats[k] = StatValue::of(ms->second);
            } else {
                mean.stats[k] = sd.stats[k] = StatValue::undefined();
            }
        }
        out.means.rows.push_back(mean);
        out.stds.rows.push_back(sd);
    }
    out.manifest.runs = max_runs;
    out.manifest.vars.assign(vars.begin(), vars.end());
    out.manifest.degrees.assign(degs.begin(), degs.end());
    out.manifest.sample_sizes.assign(ns.begin(), ns.end());
    for (const auto& a : algorithms)
        out.manifest.algorithms.push_back(a.entry());
    return out;
}

/// Reads records.tsv and algorithms.txt from a results directory.
inline Aggregate aggregate(const fs::path& results) {
    return aggregate(read_records(results / "records.tsv"), read_algorithms(results / "algorithms.txt"), results);
}

struct RecordSummary {
    std::size_t ok = 0;
    std::size_t timeout = 0;
    std::size_t error = 0;
};

inline RecordSummary summarize(const std::vector<RunRecord>& records) {
    RecordSummary s;
    for (const auto& r : records)
        (r.status == RunStatus::Ok ? s.ok : r.status == RunStatus::Timeout ? s.timeout : s.error)++;
    return s;
}

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_HARNESS_HPP
