#ifndef CAUSAL_BENCH_GRAPH_HPP
#define CAUSAL_BENCH_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <ostream>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace causal_bench {

using NodeId = int;

enum class Mark : std::uint8_t { None = 0, Tail, Arrow };

/// One edge as seen from the pair (a, b) with a < b.
struct Edge {
    NodeId a;
    NodeId b;
    Mark at_a;
    Mark at_b;

    friend bool operator==(const Edge&, const Edge&) = default;
};

inline std::vector<std::string> default_names(int n) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        names.push_back("X" + std::to_string(i + 1));
    return names;
}

/// Graph with tail/arrow endpoint marks. Holds at most one edge per
/// unordered pair and no self-loops. Endpoint marks live in a dense v x v
/// table; per-node adjacency lists are kept sorted so every traversal is
/// in node-index order.
class MixedGraph {
public:
    MixedGraph() = default;

    explicit MixedGraph(std::vector<std::string> names)
        : m_names(std::move(names)),
          m_marks(m_names.size() * m_names.size(), Mark::None),
          m_adj(m_names.size()) {
        for (std::size_t i = 0; i < m_names.size(); ++i) {
            if (!m_index.emplace(m_names[i], static_cast<NodeId>(i)).second)
                throw std::invalid_argument("duplicate node name " + m_names[i]);
        }
    }

    explicit MixedGraph(int n) : MixedGraph(default_names(n)) {}

    int num_nodes() const { return static_cast<int>(m_names.size()); }
    const std::vector<std::string>& names() const { return m_names; }
    const std::string& name(NodeId a) const {
        check_node(a);
        return m_names[static_cast<std::size_t>(a)];
    }

    NodeId index_of(std::string_view name) const {
        auto it = m_index.find(std::string(name));
        if (it == m_index.end())
            throw std::out_of_range("unknown node " + std::string(name));
        return it->second;
    }

    bool contains(std::string_view name) const { return m_index.count(std::string(name)) > 0; }

    bool adjacent(NodeId a, NodeId b) const {
        check_node(a);
        check_node(b);
        return a != b && mark(a, b) != Mark::None;
    }

    /// Mark at endpoint `b` of the edge a *-* b, or Mark::None.
    Mark mark_at(NodeId a, NodeId b) const {
        check_node(a);
        check_node(b);
        return mark(a, b);
    }

    bool is_directed(NodeId a, NodeId b) const {
        return adjacent(a, b) && mark(b, a) == Mark::Tail && mark(a, b) == Mark::Arrow;
    }
    bool is_undirected(NodeId a, NodeId b) const {
        return adjacent(a, b) && mark(b, a) == Mark::Tail && mark(a, b) == Mark::Tail;
    }
    bool is_bidirected(NodeId a, NodeId b) const {
        return adjacent(a, b) && mark(b, a) == Mark::Arrow && mark(a, b) == Mark::Arrow;
    }

    /// Adds or replaces the edge between a and b.
    void set_edge(NodeId a, NodeId b, Mark at_a, Mark at_b) {
        check_node(a);
        check_node(b);
        if (a == b)
            throw std::invalid_argument("self-loop on " + m_names[static_cast<std::size_t>(a)]);
        if (at_a == Mark::None || at_b == Mark::None)
            throw std::invalid_argument("edge endpoints need a mark");
        if (mark(a, b) == Mark::None) {
            insert_sorted(m_adj[static_cast<std::size_t>(a)], b);
            insert_sorted(m_adj[static_cast<std::size_t>(b)], a);
            ++m_num_edges;
        }
        mark_ref(b, a) = at_a;
        mark_ref(a, b) = at_b;
    }

    void add_directed(NodeId from, NodeId to) { set_edge(from, to, Mark::Tail, Mark::Arrow); }
    void add_undirected(NodeId a, NodeId b) { set_edge(a, b, Mark::Tail, Mark::Tail); }
    void add_bidirected(NodeId a, NodeId b) { set_edge(a, b, Mark::Arrow, Mark::Arrow); }

    /// Sets the mark at endpoint `b` of an existing edge a *-* b.
    void set_mark(NodeId a, NodeId b, Mark at_b) {
        if (!adjacent(a, b))
            throw std::invalid_argument("no edge " + name(a) + " - " + name(b));
        mark_ref(a, b) = at_b;
    }

    void remove_edge(NodeId a, NodeId b) {
        if (!adjacent(a, b))
            return;
        mark_ref(a, b) = Mark::None;
        mark_ref(b, a) = Mark::None;
        erase_sorted(m_adj[static_cast<std::size_t>(a)], b);
        erase_sorted(m_adj[static_cast<std::size_t>(b)], a);
        --m_num_edges;
    }

    const std::vector<NodeId>& adjacencies(NodeId a) const {
        check_node(a);
        return m_adj[static_cast<std::size_t>(a)];
    }

    std::vector<NodeId> parents(NodeId a) const {
        return filter(a, [&](NodeId b) { return is_directed(b, a); });
    }
    std::vector<NodeId> children(NodeId a) const {
        return filter(a, [&](NodeId b) { return is_directed(a, b); });
    }
    std::vector<NodeId> undirected_neighbors(NodeId a) const {
        return filter(a, [&](NodeId b) { return is_undirected(a, b); });
    }

    std::size_t num_edges() const { return m_num_edges; }

    /// Edges ordered by (a, b) with a < b.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(m_num_edges);
        for (NodeId a = 0; a < num_nodes(); ++a)
            for (NodeId b : m_adj[static_cast<std::size_t>(a)])
                if (a < b)
                    out.push_back({a, b, mark(b, a), mark(a, b)});
        return out;
    }

    MixedGraph skeleton() const {
        MixedGraph g(m_names);
        for (const Edge& e : edges())
            g.add_undirected(e.a, e.b);
        return g;
    }

    /// Same graph with nodes laid out in the order of `names`, matched by name.
    MixedGraph reindexed(const std::vector<std::string>& names) const {
        if (names.size() != m_names.size())
            throw std::invalid_argument("node sets differ in size");
        MixedGraph g(names);
        for (NodeId i = 0; i < g.num_nodes(); ++i)
            if (!contains(names[static_cast<std::size_t>(i)]))
                throw std::invalid_argument("node " + names[static_cast<std::size_t>(i)] + " missing");
        for (const Edge& e : edges())
            g.set_edge(g.index_of(name(e.a)), g.index_of(name(e.b)), e.at_a, e.at_b);
        return g;
    }

    friend bool operator==(const MixedGraph& l, const MixedGraph& r) {
        return l.m_names == r.m_names && l.m_marks == r.m_marks;
    }

private:
    void check_node(NodeId a) const {
        if (a < 0 || a >= num_nodes())
            throw std::out_of_range("unknown node index " + std::to_string(a));
    }

    Mark mark(NodeId a, NodeId b) const {
        return m_marks[static_cast<std::size_t>(a) * m_names.size() + static_cast<std::size_t>(b)];
    }
    Mark& mark_ref(NodeId a, NodeId b) {
        return m_marks[static_cast<std::size_t>(a) * m_names.size() + static_cast<std::size_t>(b)];
    }

    template <class Pred>
    std::vector<NodeId> filter(NodeId a, Pred pred) const {
        std::vector<NodeId> out;
        for (NodeId b : adjacencies(a))
            if (pred(b))
                out.push_back(b);
        return out;
    }

    static void insert_sorted(std::vector<NodeId>& v, NodeId x) {
        v.insert(std::lower_bound(v.begin(), v.end(), x), x);
    }
    static void erase_sorted(std::vector<NodeId>& v, NodeId x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        if (it != v.end() && *it == x)
            v.erase(it);
    }

    std::vector<std::string> m_names;
    std::unordered_map<std::string, NodeId> m_index;
    std::vector<Mark> m_marks;
    std::vector<std::vector<NodeId>> m_adj;
    std::size_t m_num_edges = 0;
};

namespace detail {

inline std::vector<NodeId> kahn_order(const MixedGraph& g, NodeId* cycle_member) {
    const int n = g.num_nodes();
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    for (const Edge& e : g.edges()) {
        if (e.at_a == Mark::Tail && e.at_b == Mark::Arrow)
            ++indegree[static_cast<std::size_t>(e.b)];
        else if (e.at_a == Mark::Arrow && e.at_b == Mark::Tail)
            ++indegree[static_cast<std::size_t>(e.a)];
    }
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId i = 0; i < n; ++i)
        if (indegree[static_cast<std::size_t>(i)] == 0)
            ready.push(i);
    std::vector<NodeId> order;
    order.reserve(static_cast<std::size_t>(n));
    while (!ready.empty()) {
        NodeId a = ready.top();
        ready.pop();
        order.push_back(a);
        for (NodeId b : g.adjacencies(a))
            if (g.is_directed(a, b) && --indegree[static_cast<std::size_t>(b)] == 0)
                ready.push(b);
    }
    if (cycle_member && static_cast<int>(order.size()) < n) {
        for (NodeId i = 0; i < n; ++i)
            if (indegree[static_cast<std::size_t>(i)] > 0) {
                *cycle_member = i;
                break;
            }
    }
    return order;
}

}  // namespace detail

/// A mixed graph whose edges are all directed and which has no directed cycle.
class Dag {
public:
    Dag() = default;

    explicit Dag(MixedGraph g) : m_graph(std::move(g)) {
        for (const Edge& e : m_graph.edges()) {
            bool forward = e.at_a == Mark::Tail && e.at_b == Mark::Arrow;
            bool backward = e.at_a == Mark::Arrow && e.at_b == Mark::Tail;
            if (!forward && !backward)
                throw std::invalid_argument("edge " + m_graph.name(e.a) + " - " + m_graph.name(e.b) +
                                            " is not directed");
        }
        NodeId member = -1;
        m_order = detail::kahn_order(m_graph, &member);
        if (static_cast<int>(m_order.size()) < m_graph.num_nodes())
            throw std::invalid_argument("graph has a directed cycle through " + m_graph.name(member));
        m_parents.resize(static_cast<std::size_t>(m_graph.num_nodes()));
        m_children.resize(static_cast<std::size_t>(m_graph.num_nodes()));
        for (NodeId i = 0; i < m_graph.num_nodes(); ++i) {
            m_parents[static_cast<std::size_t>(i)] = m_graph.parents(i);
            m_children[static_cast<std::size_t>(i)] = m_graph.children(i);
        }
    }

    Dag(std::vector<std::string> names, std::span<const std::pair<NodeId, NodeId>> edges)
        : Dag(build(std::move(names), edges)) {}

    Dag(int n, std::initializer_list<std::pair<NodeId, NodeId>> edges)
        : Dag(default_names(n), std::span<const std::pair<NodeId, NodeId>>(edges.begin(), edges.size())) {}

    const MixedGraph& graph() const { return m_graph; }
    int num_nodes() const { return m_graph.num_nodes(); }
    const std::vector<std::string>& names() const { return m_graph.names(); }
    const std::vector<NodeId>& parents(NodeId a) const { return m_parents.at(static_cast<std::size_t>(a)); }
    const std::vector<NodeId>& children(NodeId a) const { return m_children.at(static_cast<std::size_t>(a)); }
    bool has_edge(NodeId from, NodeId to) const { return m_graph.is_directed(from, to); }
    std::size_t num_edges() const { return m_graph.num_edges(); }

    /// Topological order preferring the smallest ready index.
    const std::vector<NodeId>& order() const { return m_order; }

    friend bool operator==(const Dag& l, const Dag& r) { return l.m_graph == r.m_graph; }

private:
    static MixedGraph build(std::vector<std::string> names, std::span<const std::pair<NodeId, NodeId>> edges) {
        MixedGraph g(std::move(names));
        for (auto [from, to] : edges) {
            if (g.adjacent(from, to))
                throw std::invalid_argument("duplicate edge " + g.name(from) + " -> " + g.name(to));
            g.add_directed(from, to);
        }
        return g;
    }

    MixedGraph m_graph;
    std::vector<NodeId> m_order;
    std::vector<std::vector<NodeId>> m_parents;
    std::vector<std::vector<NodeId>> m_children;
};

inline bool adjacent(const MixedGraph& g, NodeId a, NodeId b) { return g.adjacent(a, b); }

/// Topological order of the directed edges of `g`; throws naming a node on a
/// cycle. Nodes with no constraint between them come out in index order.
inline std::vector<NodeId> topological_order(const MixedGraph& g) {
    NodeId member = -1;
    auto order = detail::kahn_order(g, &member);
    if (static_cast<int>(order.size()) < g.num_nodes())
        throw std::invalid_argument("graph has a directed cycle through " + g.name(member));
    return order;
}

inline std::vector<NodeId> topological_order(const Dag& g) { return g.order(); }

/// d-separation by reachability over (node, direction) states.
inline bool d_separated(const Dag& g, NodeId x, NodeId y, std::span<const NodeId> z) {
    const int n = g.num_nodes();
    if (x < 0 || x >= n || y < 0 || y >= n)
        throw std::out_of_range("unknown node in d-separation query");
    if (x == y)
        throw std::invalid_argument("d-separation query needs two distinct nodes");
    std::vector<char> in_z(static_cast<std::size_t>(n), 0);
    for (NodeId v : z) {
        if (v < 0 || v >= n)
            throw std::out_of_range("unknown node in conditioning set");
        if (v == x || v == y)
            throw std::invalid_argument("conditioning set contains a queried node");
        in_z[static_cast<std::size_t>(v)] = 1;
    }

    // Ancestors of the conditioning set (inclusive) are the colliders that open.
    std::vector<char> anc(static_cast<std::size_t>(n), 0);
    std::vector<NodeId> stack(z.begin(), z.end());
    while (!stack.empty()) {
        NodeId v = stack.back();
        stack.pop_back();
        if (anc[static_cast<std::size_t>(v)])
            continue;
        anc[static_cast<std::size_t>(v)] = 1;
        for (NodeId p : g.parents(v))
            stack.push_back(p);
    }

    // visited[2v] : reached v travelling up (from a child); visited[2v+1] : travelling down.
    std::vector<char> visited(2 * static_cast<std::size_t>(n), 0);
    std::vector<std::pair<NodeId, bool>> frontier{{x, true}};
    while (!frontier.empty()) {
        auto [v, up] = frontier.back();
        frontier.pop_back();
        auto slot = 2 * static_cast<std::size_t>(v) + (up ? 0 : 1);
        if (visited[slot])
            continue;
        visited[slot] = 1;
        bool conditioned = in_z[static_cast<std::size_t>(v)];
        if (v == y && !conditioned)
            return false;
        if (up) {
            if (conditioned)
                continue;
            for (NodeId p : g.parents(v))
                frontier.emplace_back(p, true);
            for (NodeId c : g.children(v))
                frontier.emplace_back(c, false);
        } else {
            if (!conditioned)
                for (NodeId c : g.children(v))
                    frontier.emplace_back(c, false);
            if (anc[static_cast<std::size_t>(v)])
                for (NodeId p : g.parents(v))
                    frontier.emplace_back(p, true);
        }
    }
    return true;
}

inline bool d_separated(const Dag& g, NodeId x, NodeId y, std::initializer_list<NodeId> z) {
    return d_separated(g, x, y, std::span<const NodeId>(z.begin(), z.size()));
}

namespace detail {

inline bool directed(const MixedGraph& g, NodeId a, NodeId b) { return g.is_directed(a, b); }
inline bool undirected(const MixedGraph& g, NodeId a, NodeId b) { return g.is_undirected(a, b); }

/// Whether some Meek rule compels a -> b, for an undirected edge a - b.
inline bool meek_implies(const MixedGraph& g, NodeId a, NodeId b) {
    const auto& adj_a = g.adjacencies(a);
    // R1: c -> a - b, c and b nonadjacent.
    for (NodeId c : adj_a)
        if (c != b && directed(g, c, a) && !g.adjacent(c, b))
            return true;
    // R2: a -> c -> b.
    for (NodeId c : adj_a)
        if (c != b && directed(g, a, c) && directed(g, c, b))
            return true;
    // R3: a - c -> b, a - d -> b, c and d nonadjacent.
    std::vector<NodeId> into_b;
    for (NodeId c : adj_a)
        if (c != b && undirected(g, a, c) && directed(g, c, b))
            into_b.push_back(c);
    for (std::size_t i = 0; i < into_b.size(); ++i)
        for (std::size_t j = i + 1; j < into_b.size(); ++j)
            if (!g.adjacent(into_b[i], into_b[j]))
                return true;
    // R4: a - c -> d -> b, c and b nonadjacent, a adjacent to d.
    for (NodeId c : adj_a) {
        if (c == b || !undirected(g, a, c) || g.adjacent(c, b))
            continue;
        for (NodeId d : g.adjacencies(c))
            if (d != a && d != b && directed(g, c, d) && directed(g, d, b) && g.adjacent(a, d))
                return true;
    }
    return false;
}

}  // namespace detail

/// Closes `g` under Meek's rules R1-R4. Each round computes every implied
/// orientation against the same snapshot and applies them together, so the
/// result does not depend on node order. A pair implied in both directions
/// in one round is left undirected. Bidirected edges are never premises.
inline MixedGraph meek_closure(MixedGraph g) {
    while (true) {
        std::vector<std::pair<NodeId, NodeId>> implied;
        for (const Edge& e : g.edges()) {
            if (e.at_a != Mark::Tail || e.at_b != Mark::Tail)
                continue;
            bool ab = detail::meek_implies(g, e.a, e.b);
            bool ba = detail::meek_implies(g, e.b, e.a);
            if (ab && !ba)
                implied.emplace_back(e.a, e.b);
            else if (ba && !ab)
                implied.emplace_back(e.b, e.a);
        }
        if (implied.empty())
            return g;
        for (auto [from, to] : implied)
            g.add_directed(from, to);
    }
}

/// Skeleton plus the unshielded colliders already present among directed
/// edges of `g`; every other edge undirected.
inline MixedGraph collider_pattern(const MixedGraph& g) {
    MixedGraph out = g.skeleton();
    for (NodeId c = 0; c < g.num_nodes(); ++c) {
        std::vector<NodeId> pa = g.parents(c);
        for (std::size_t i = 0; i < pa.size(); ++i)
            for (std::size_t j = i + 1; j < pa.size(); ++j)
                if (!g.adjacent(pa[i], pa[j])) {
                    out.add_directed(pa[i], c);
                    out.add_directed(pa[j], c);
                }
    }
    return out;
}

/// The CPDAG (pattern) of a DAG.
inline MixedGraph cpdag_of(const Dag& g) { return meek_closure(collider_pattern(g.graph())); }

/// A DAG consistent with the PDAG `g` (same skeleton, same unshielded
/// colliders, directed edges kept), by repeatedly removing a sink whose
/// undirected neighbours are adjacent to all of its other neighbours.
inline Dag consistent_extension(const MixedGraph& g) {
    MixedGraph work = g;
    MixedGraph out = g;
    std::vector<char> removed(static_cast<std::size_t>(g.num_nodes()), 0);
    for (int remaining = g.num_nodes(); remaining > 0; --remaining) {
        NodeId pick = -1;
        for (NodeId x = 0; x < work.num_nodes() && pick < 0; ++x) {
            if (removed[static_cast<std::size_t>(x)])
                continue;
            const auto& adj = work.adjacencies(x);
            bool sink = std::none_of(adj.begin(), adj.end(), [&](NodeId b) {
                return work.is_directed(x, b) || work.is_bidirected(x, b);
            });
            if (!sink)
                continue;
            bool ok = true;
            for (NodeId y : adj) {
                if (!work.is_undirected(x, y))
                    continue;
                for (NodeId w : adj)
                    if (w != y && !work.adjacent(y, w)) {
                        ok = false;
                        break;
                    }
                if (!ok)
                    break;
            }
            if (ok)
                pick = x;
        }
        if (pick < 0)
            throw std::invalid_argument("graph admits no consistent DAG extension");
        for (NodeId y : std::vector<NodeId>(work.adjacencies(pick))) {
            if (work.is_undirected(pick, y))
                out.add_directed(y, pick);
            work.remove_edge(pick, y);
        }
        removed[static_cast<std::size_t>(pick)] = 1;
    }
    return Dag(std::move(out));
}

/// Compact edge list, e.g. {X1 --> X2, X2 --- X3}.
inline std::ostream& operator<<(std::ostream& os, const MixedGraph& g) {
    auto tip = [](Mark m, bool left) {
        if (m == Mark::Arrow)
            return left ? "<" : ">";
        return "-";
    };
    os << '{';
    bool first = true;
    for (const Edge& e : g.edges()) {
        os << (first ? "" : ", ") << g.name(e.a) << ' ' << tip(e.at_a, true) << '-' << tip(e.at_b, false) << ' '
           << g.name(e.b);
        first = false;
    }
    return os << '}';
}

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_GRAPH_HPP
