#ifndef CAUSAL_BENCH_DATAIO_HPP
#define CAUSAL_BENCH_DATAIO_HPP

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "simulate.hpp"

namespace causal_bench {

/// Malformed input; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), m_line(line) {}
    std::size_t line() const { return m_line; }

private:
    std::size_t m_line;
};

/// Ten significant digits, trailing zeros dropped.
inline std::string format_decimal(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep))
        out.push_back(field);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

inline double parse_double(const std::string& s, const std::string& source, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(source, line, "not a number: '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const std::string& source, std::size_t line) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(source, line, "not an integer: '" + s + "'");
    }
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets: tab-separated header of names, then one sample per line.
// ---------------------------------------------------------------------------

inline void write_dataset(std::ostream& out, const DataSet& data) {
    data.validate();
    for (std::size_t j = 0; j < data.names.size(); ++j)
        out << (j ? "\t" : "") << data.names[j];
    out << '\n';
    for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.values.cols(); ++j)
            out << (j ? "\t" : "") << format_decimal(data.values(i, j));
        out << '\n';
    }
}

inline DataSet read_dataset(std::istream& in, const std::string& source = "<dataset>") {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line))
        throw ParseError(source, lineno, "missing header line");
    detail::strip_cr(line);
    DataSet data;
    data.names = detail::split(line, '\t');
    if (data.names.empty() || std::any_of(data.names.begin(), data.names.end(), [](auto& s) { return s.empty(); }))
        throw ParseError(source, lineno, "empty variable name in header");
    std::set<std::string> uniq(data.names.begin(), data.names.end());
    if (uniq.size() != data.names.size())
        throw ParseError(source, lineno, "duplicate variable name in header");
    std::vector<double> flat;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty())
            continue;
        auto fields = detail::split(line, '\t');
        if (fields.size() != data.names.size())
            throw ParseError(source, lineno,
                             "expected " + std::to_string(data.names.size()) + " values, found " +
                                 std::to_string(fields.size()));
        for (const auto& f : fields)
            flat.push_back(detail::parse_double(f, source, lineno));
        ++rows;
    }
    const auto cols = static_cast<Eigen::Index>(data.names.size());
    data.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), static_cast<Eigen::Index>(rows), cols);
    return data;
}

inline void write_dataset(const std::filesystem::path& path, const DataSet& data) {
    auto out = detail::open_out(path);
    write_dataset(out, data);
}

inline DataSet read_dataset(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_dataset(in, path.string());
}

// ---------------------------------------------------------------------------
// Graphs.
//
//   Graph Nodes:
//   X1;X2;X3
//   Graph Edges:
//   1. X1 --> X2
//
// The edge section is omitted for a graph without edges. A file that does
// not start with "Graph Nodes:" is read as a plain edge list with one
// "A -> B", "A <- B", "A -- B" or "A <-> B" per line ('#' starts a comment).
// ---------------------------------------------------------------------------

inline std::string format_graph(const MixedGraph& g) {
    std::ostringstream out;
    out << "Graph Nodes:\n";
    for (NodeId i = 0; i < g.num_nodes(); ++i)
        out << (i ? ";" : "") << g.name(i);
    out << '\n';
    auto edges = g.edges();
    if (!edges.empty()) {
        out << "Graph Edges:\n";
        std::size_t k = 0;
        for (const Edge& e : edges) {
            out << ++k << ". ";
            if (e.at_a == Mark::Tail && e.at_b == Mark::Arrow)
                out << g.name(e.a) << " --> " << g.name(e.b);
            else if (e.at_a == Mark::Arrow && e.at_b == Mark::Tail)
                out << g.name(e.b) << " --> " << g.name(e.a);
            else if (e.at_a == Mark::Tail)
                out << g.name(e.a) << " --- " << g.name(e.b);
            else
                out << g.name(e.a) << " <-> " << g.name(e.b);
            out << '\n';
        }
    }
    return out.str();
}

namespace detail {

inline void add_parsed_edge(MixedGraph& g, const std::string& a, const std::string& token, const std::string& b,
                            const std::string& source, std::size_t lineno) {
    if (!g.contains(a))
        throw ParseError(source, lineno, "undeclared node '" + a + "'");
    if (!g.contains(b))
        throw ParseError(source, lineno, "undeclared node '" + b + "'");
    NodeId ia = g.index_of(a);
    NodeId ib = g.index_of(b);
    if (ia == ib)
        throw ParseError(source, lineno, "self-loop on '" + a + "'");
    if (g.adjacent(ia, ib))
        throw ParseError(source, lineno, "second edge between '" + a + "' and '" + b + "'");
    if (token == "-->" || token == "->")
        g.add_directed(ia, ib);
    else if (token == "<--" || token == "<-")
        g.add_directed(ib, ia);
    else if (token == "---" || token == "--")
        g.add_undirected(ia, ib);
    else if (token == "<->")
        g.add_bidirected(ia, ib);
    else
        throw ParseError(source, lineno, "unknown edge token '" + token + "'");
}

inline MixedGraph parse_edge_list(const std::vector<std::string>& lines, const std::string& source) {
    std::vector<std::tuple<std::string, std::string, std::string, std::size_t>> parsed;
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i].substr(0, lines[i].find('#'));
        line = trim(line);
        if (line.empty())
            continue;
        std::istringstream in(line);
        std::string a, token, b, extra;
        if (!(in >> a >> token >> b) || (in >> extra))
            throw ParseError(source, i + 1, "expected 'A <edge> B'");
        for (const auto& n : {a, b})
            if (seen.insert(n).second)
                names.push_back(n);
        parsed.emplace_back(a, token, b, i + 1);
    }
    MixedGraph g(names);
    for (auto& [a, token, b, lineno] : parsed)
        add_parsed_edge(g, a, token, b, source, lineno);
    return g;
}

}  // namespace detail

inline MixedGraph parse_graph(std::istream& in, const std::string& source = "<graph>") {
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        detail::strip_cr(line);
        lines.push_back(line);
    }
    std::size_t first = 0;
    while (first < lines.size() && detail::trim(lines[first]).empty())
        ++first;
    if (first == lines.size() || detail::trim(lines[first]) != "Graph Nodes:")
        return detail::parse_edge_list(lines, source);

    std::size_t i = first + 1;
    std::vector<std::string> names;
    while (i < lines.size() && detail::trim(lines[i]).empty())
        ++i;
    if (i < lines.size() && detail::trim(lines[i]) != "Graph Edges:") {
        for (auto& n : detail::split(detail::trim(lines[i]), ';'))
            if (!n.empty())
                names.push_back(n);
        ++i;
    }
    MixedGraph g;
    try {
        g = MixedGraph(names);
    } catch (const std::invalid_argument& e) {
        throw ParseError(source, first + 2, e.what());
    }
    while (i < lines.size() && detail::trim(lines[i]).empty())
        ++i;
    if (i == lines.size())
        return g;
    if (detail::trim(lines[i]) != "Graph Edges:")
        throw ParseError(source, i + 1, "expected 'Graph Edges:'");
    for (++i; i < lines.size(); ++i) {
        std::string line = detail::trim(lines[i]);
        if (line.empty())
            continue;
        std::istringstream in(line);
        std::string index, a, token, b, extra;
        if (!(in >> index >> a >> token >> b) || (in >> extra) || index.empty() || index.back() != '.')
            throw ParseError(source, i + 1, "expected 'k. A <edge> B'");
        if (token != "-->" && token != "---" && token != "<->")
            throw ParseError(source, i + 1, "unknown edge token '" + token + "'");
        detail::add_parsed_edge(g, a, token, b, source, i + 1);
    }
    return g;
}

inline MixedGraph parse_graph(const std::string& text) {
    std::istringstream in(text);
    return parse_graph(in);
}

inline void write_graph(const std::filesystem::path& path, const MixedGraph& g) {
    auto out = detail::open_out(path);
    out << format_graph(g);
}

inline MixedGraph read_graph(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return parse_graph(in, path.string());
}

// ---------------------------------------------------------------------------
// Result tables: stats.txt (means), std.txt (standard deviations), config.txt.
// ---------------------------------------------------------------------------

/// A table cell: a number, '*' (undefined: division by zero) or '-'
/// (missing: timed out or failed).
struct StatValue {
    enum class Kind { Value, Undefined, Missing };
    Kind kind = Kind::Missing;
    double value = 0.0;

    static StatValue of(double v) { return {Kind::Value, v}; }
    static StatValue undefined() { return {Kind::Undefined, 0.0}; }
    static StatValue missing() { return {Kind::Missing, 0.0}; }

    bool defined() const { return kind == Kind::Value; }

    std::string to_string() const {
        switch (kind) {
            case Kind::Value:
                return format_decimal(value);
            case Kind::Undefined:
                return "*";
            case Kind::Missing:
                return "-";
        }
        return "-";
    }

    friend bool operator==(const StatValue& a, const StatValue& b) {
        return a.kind == b.kind && (a.kind != Kind::Value || a.value == b.value);
    }
};

inline constexpr std::array<const char*, 7> kStatColumns = {"AP", "AR", "AHP", "AHR", "McAdj", "McArrow", "E"};
inline constexpr std::size_t kElapsedColumn = 6;

struct StatRow {
    int alg_id = 0;
    int vars = 0;
    int deg = 0;
    int n = 0;
    std::array<StatValue, 7> stats{};

    std::tuple<int, int, int, int> key() const { return {alg_id, vars, deg, n}; }
    friend bool operator==(const StatRow&, const StatRow&) = default;
};

struct StatsTable {
    std::vector<StatRow> rows;
    friend bool operator==(const StatsTable&, const StatsTable&) = default;
};

inline std::string stats_header() {
    std::string h = "Alg\tVars\tDeg\tN";
    for (const char* c : kStatColumns)
        h += std::string("\t") + c;
    return h;
}

namespace detail {

inline void check_unique_keys(const StatsTable& t) {
    std::set<std::tuple<int, int, int, int>> keys;
    for (const auto& r : t.rows)
        if (!keys.insert(r.key()).second)
            throw std::invalid_argument("duplicate row for algorithm " + std::to_string(r.alg_id) + ", cell (" +
                                        std::to_string(r.vars) + ", " + std::to_string(r.deg) + ", " +
                                        std::to_string(r.n) + ")");
}

}  // namespace detail

inline void write_stats_table(std::ostream& out, const StatsTable& t) {
    detail::check_unique_keys(t);
    out << stats_header() << '\n';
    for (const auto& r : t.rows) {
        out << r.alg_id << '\t' << r.vars << '\t' << r.deg << '\t' << r.n;
        for (const auto& s : r.stats)
            out << '\t' << s.to_string();
        out << '\n';
    }
}

inline StatsTable read_stats_table(std::istream& in, const std::string& source = "<stats>") {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line))
        throw ParseError(source, lineno, "missing header");
    detail::strip_cr(line);
    if (line != stats_header())
        throw ParseError(source, lineno, "unexpected header");
    StatsTable t;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty())
            continue;
        auto f = detail::split(line, '\t');
        if (f.size() != 4 + kStatColumns.size())
            throw ParseError(source, lineno, "expected " + std::to_string(4 + kStatColumns.size()) + " columns");
        StatRow r;
        r.alg_id = detail::parse_int(f[0], source, lineno);
        r.vars = detail::parse_int(f[1], source, lineno);
        r.deg = detail::parse_int(f[2], source, lineno);
        r.n = detail::parse_int(f[3], source, lineno);
        for (std::size_t k = 0; k < kStatColumns.size(); ++k) {
            const auto& cell = f[4 + k];
            if (cell == "*")
                r.stats[k] = StatValue::undefined();
            else if (cell == "-")
                r.stats[k] = StatValue::missing();
            else
                r.stats[k] = StatValue::of(detail::parse_double(cell, source, lineno));
        }
        t.rows.push_back(r);
    }
    try {
        detail::check_unique_keys(t);
    } catch (const std::invalid_argument& e) {
        throw ParseError(source, lineno, e.what());
    }
    return t;
}

struct AlgorithmEntry {
    int id = 0;
    std::string name;
    std::vector<std::pair<std::string, std::string>> params;

    /// e.g. "pc alpha=0.01 conflict=priority"
    std::string label() const {
        std::string s = name;
        for (const auto& [k, v] : params)
            s += " " + k + "=" + v;
        return s;
    }
    friend bool operator==(const AlgorithmEntry&, const AlgorithmEntry&) = default;
};

/// config.txt: one tab-separated record per line.
///
///   runs       <count>
///   vars       <level>...
///   deg        <level>...
///   n          <level>...
///   parameter  <name> <value>...       (derived from the algorithm lines)
///   algorithm  <id> <name> <key=value>...
struct ConfigManifest {
    int runs = 0;
    std::vector<int> vars;
    std::vector<int> degrees;
    std::vector<int> sample_sizes;
    std::vector<AlgorithmEntry> algorithms;

    /// Parameter names (sorted) with their values in first-seen order.
    std::map<std::string, std::vector<std::string>> parameters() const {
        std::map<std::string, std::vector<std::string>> out;
        for (const auto& a : algorithms)
            for (const auto& [k, v] : a.params) {
                auto& vals = out[k];
                if (std::find(vals.begin(), vals.end(), v) == vals.end())
                    vals.push_back(v);
            }
        return out;
    }

    const AlgorithmEntry* find_algorithm(int id) const {
        for (const auto& a : algorithms)
            if (a.id == id)
                return &a;
        return nullptr;
    }

    friend bool operator==(const ConfigManifest&, const ConfigManifest&) = default;
};

inline void write_config(std::ostream& out, const ConfigManifest& m) {
    auto levels = [&](const char* key, const std::vector<int>& v) {
        out << key;
        for (int x : v)
            out << '\t' << x;
        out << '\n';
    };
    out << "runs\t" << m.runs << '\n';
    levels("vars", m.vars);
    levels("deg", m.degrees);
    levels("n", m.sample_sizes);
    for (const auto& [name, values] : m.parameters()) {
        out << "parameter\t" << name;
        for (const auto& v : values)
            out << '\t' << v;
        out << '\n';
    }
    for (const auto& a : m.algorithms) {
        out << "algorithm\t" << a.id << '\t' << a.name;
        for (const auto& [k, v] : a.params)
            out << '\t' << k << '=' << v;
        out << '\n';
    }
}

inline ConfigManifest read_config(std::istream& in, const std::string& source = "<config>") {
    ConfigManifest m;
    std::string line;
    std::size_t lineno = 0;
    std::set<int> ids;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty())
            continue;
        auto f = detail::split(line, '\t');
        const std::string& key = f[0];
        auto ints = [&](std::vector<int>& dst) {
            for (std::size_t i = 1; i < f.size(); ++i)
                dst.push_back(detail::parse_int(f[i], source, lineno));
        };
        if (key == "runs") {
            if (f.size() != 2)
                throw ParseError(source, lineno, "runs takes one value");
            m.runs = detail::parse_int(f[1], source, lineno);
        } else if (key == "vars") {
            ints(m.vars);
        } else if (key == "deg") {
            ints(m.degrees);
        } else if (key == "n") {
            ints(m.sample_sizes);
        } else if (key == "parameter") {
            if (f.size() < 2)
                throw ParseError(source, lineno, "parameter needs a name");
        } else if (key == "algorithm") {
            if (f.size() < 3)
                throw ParseError(source, lineno, "algorithm needs an id and a name");
            AlgorithmEntry a;
            a.id = detail::parse_int(f[1], source, lineno);
            a.name = f[2];
            for (std::size_t i = 3; i < f.size(); ++i) {
                auto eq = f[i].find('=');
                if (eq == std::string::npos || eq == 0)
                    throw ParseError(source, lineno, "expected key=value, got '" + f[i] + "'");
                a.params.emplace_back(f[i].substr(0, eq), f[i].substr(eq + 1));
            }
            if (!ids.insert(a.id).second)
                throw ParseError(source, lineno, "duplicate algorithm id " + f[1]);
            m.algorithms.push_back(std::move(a));
        } else {
            throw ParseError(source, lineno, "unknown record '" + key + "'");
        }
    }
    return m;
}

/// Throws unless every row's algorithm and cell appear in the manifest.
inline void check_rows_resolve(const StatsTable& t, const ConfigManifest& m) {
    auto has = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
    for (const auto& r : t.rows) {
        if (!m.find_algorithm(r.alg_id))
            throw std::invalid_argument("row refers to unknown algorithm " + std::to_string(r.alg_id));
        if (!has(m.vars, r.vars) || !has(m.degrees, r.deg) || !has(m.sample_sizes, r.n))
            throw std::invalid_argument("row cell (" + std::to_string(r.vars) + ", " + std::to_string(r.deg) + ", " +
                                        std::to_string(r.n) + ") is not in the manifest");
    }
}

/// Writes stats.txt, std.txt and config.txt into `dir`.
inline void write_tables(const std::filesystem::path& dir, const StatsTable& means, const StatsTable& stds,
                         const ConfigManifest& manifest) {
    if (means.rows.size() != stds.rows.size())
        throw std::invalid_argument("mean and standard deviation tables differ in length");
    for (std::size_t i = 0; i < means.rows.size(); ++i)
        if (means.rows[i].key() != stds.rows[i].key())
            throw std::invalid_argument("mean and standard deviation rows are not aligned");
    check_rows_resolve(means, manifest);
    std::filesystem::create_directories(dir);
    auto stats = detail::open_out(dir / "stats.txt");
    write_stats_table(stats, means);
    auto std_out = detail::open_out(dir / "std.txt");
    write_stats_table(std_out, stds);
    auto config = detail::open_out(dir / "config.txt");
    write_config(config, manifest);
}

struct ResultTables {
    StatsTable means;
    StatsTable stds;
    ConfigManifest manifest;
};

inline ResultTables read_tables(const std::filesystem::path& dir) {
    ResultTables t;
    {
        auto in = detail::open_in(dir / "stats.txt");
        t.means = read_stats_table(in, (dir / "stats.txt").string());
    }
    {
        auto in = detail::open_in(dir / "std.txt");
        t.stds = read_stats_table(in, (dir / "std.txt").string());
    }
    {
        auto in = detail::open_in(dir / "config.txt");
        t.manifest = read_config(in, (dir / "config.txt").string());
    }
    check_rows_resolve(t.means, t.manifest);
    check_rows_resolve(t.stds, t.manifest);
    return t;
}

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_DATAIO_HPP
