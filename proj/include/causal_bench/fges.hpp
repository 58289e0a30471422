#ifndef CAUSAL_BENCH_FGES_HPP
#define CAUSAL_BENCH_FGES_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "graph.hpp"
#include "score.hpp"

namespace causal_bench {

// ---------------------------------------------------------------------------
// Equivalence-class operators on CPDAGs.
// ---------------------------------------------------------------------------

/// Neighbours y - t of y (undirected) that are adjacent to x.
inline std::vector<NodeId> na_yx(const MixedGraph& g, NodeId x, NodeId y) {
    std::vector<NodeId> out;
    for (NodeId t : g.adjacencies(y))
        if (t != x && g.is_undirected(y, t) && g.adjacent(t, x))
            out.push_back(t);
    return out;
}

/// Neighbours y - t of y (undirected) not adjacent to x: the pool for T.
inline std::vector<NodeId> insert_pool(const MixedGraph& g, NodeId x, NodeId y) {
    std::vector<NodeId> out;
    for (NodeId t : g.adjacencies(y))
        if (t != x && g.is_undirected(y, t) && !g.adjacent(t, x))
            out.push_back(t);
    return out;
}

inline bool is_clique(const MixedGraph& g, std::span<const NodeId> nodes) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            if (!g.adjacent(nodes[i], nodes[j]))
                return false;
    return true;
}

/// True when every semi-directed path from `from` to `to` passes through `blocked`.
inline bool semidirected_paths_blocked(const MixedGraph& g, NodeId from, NodeId to, std::span<const NodeId> blocked) {
    std::vector<char> seen(static_cast<std::size_t>(g.num_nodes()), 0);
    for (NodeId b : blocked)
        seen[static_cast<std::size_t>(b)] = 1;
    std::vector<NodeId> stack{from};
    seen[static_cast<std::size_t>(from)] = 1;
    while (!stack.empty()) {
        NodeId a = stack.back();
        stack.pop_back();
        for (NodeId b : g.adjacencies(a)) {
            if (seen[static_cast<std::size_t>(b)])
                continue;
            if (!g.is_undirected(a, b) && !g.is_directed(a, b))
                continue;
            if (b == to)
                return false;
            seen[static_cast<std::size_t>(b)] = 1;
            stack.push_back(b);
        }
    }
    return true;
}

namespace detail {

inline std::vector<NodeId> sorted_union(std::vector<NodeId> a, std::span<const NodeId> b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

inline bool subset_of(std::span<const NodeId> sub, const std::vector<NodeId>& sorted_super) {
    return std::all_of(sub.begin(), sub.end(),
                       [&](NodeId a) { return std::binary_search(sorted_super.begin(), sorted_super.end(), a); });
}

/// Every subset T of `pool` (sorted) such that base u T is a clique.
inline std::vector<std::vector<NodeId>> clique_extensions(const MixedGraph& g, const std::vector<NodeId>& base,
                                                          const std::vector<NodeId>& pool) {
    std::vector<std::vector<NodeId>> out;
    if (!is_clique(g, base))
        return out;
    std::vector<NodeId> current;
    std::function<void(std::size_t)> grow = [&](std::size_t start) {
        out.push_back(current);
        for (std::size_t i = start; i < pool.size(); ++i) {
            NodeId t = pool[i];
            bool fits = std::all_of(base.begin(), base.end(), [&](NodeId b) { return g.adjacent(b, t); }) &&
                        std::all_of(current.begin(), current.end(), [&](NodeId c) { return g.adjacent(c, t); });
            if (!fits)
                continue;
            current.push_back(t);
            grow(i + 1);
            current.pop_back();
        }
    };
    grow(0);
    return out;
}

/// Subsets ordered by size, then lexicographically.
inline bool smaller_subset(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    if (a.size() != b.size())
        return a.size() < b.size();
    return a < b;
}

}  // namespace detail

/// Pattern implied by `g`: skeleton, unshielded colliders among its
/// directed edges, Meek closure.
inline MixedGraph rebuild_pattern(const MixedGraph& g) { return meek_closure(collider_pattern(g)); }

/// Insert(x, y, T): x, y nonadjacent, T drawn from the undirected neighbours
/// of y not adjacent to x, NA_yx u T a clique, and every semi-directed path
/// from y to x meets NA_yx u T.
inline bool valid_insert(const MixedGraph& g, NodeId x, NodeId y, std::span<const NodeId> t) {
    if (x == y || g.adjacent(x, y))
        return false;
    if (!detail::subset_of(t, insert_pool(g, x, y)))
        return false;
    std::vector<NodeId> blocked = detail::sorted_union(na_yx(g, x, y), t);
    return is_clique(g, blocked) && semidirected_paths_blocked(g, y, x, blocked);
}

/// Adds x -> y, directs t -> y for t in T, and rebuilds the pattern.
inline MixedGraph apply_insert(const MixedGraph& g, NodeId x, NodeId y, std::span<const NodeId> t) {
    if (!valid_insert(g, x, y, t))
        throw std::logic_error("invalid insert " + g.name(x) + " -> " + g.name(y));
    MixedGraph out = g;
    out.add_directed(x, y);
    for (NodeId a : t)
        out.add_directed(a, y);
    return rebuild_pattern(out);
}

/// Delete(x, y, H): edge x -> y or x - y, H drawn from NA_yx, NA_yx \ H a clique.
inline bool valid_delete(const MixedGraph& g, NodeId x, NodeId y, std::span<const NodeId> h) {
    if (x == y || !(g.is_directed(x, y) || g.is_undirected(x, y)))
        return false;
    std::vector<NodeId> na = na_yx(g, x, y);
    if (!detail::subset_of(h, na))
        return false;
    std::vector<NodeId> removed(h.begin(), h.end());
    std::sort(removed.begin(), removed.end());
    std::vector<NodeId> rest;
    std::set_difference(na.begin(), na.end(), removed.begin(), removed.end(), std::back_inserter(rest));
    return is_clique(g, rest);
}

/// Removes x - y, directs y -> h and (undirected) x -> h for h in H, and
/// rebuilds the pattern.
inline MixedGraph apply_delete(const MixedGraph& g, NodeId x, NodeId y, std::span<const NodeId> h) {
    if (!valid_delete(g, x, y, h))
        throw std::logic_error("invalid delete " + g.name(x) + " - " + g.name(y));
    MixedGraph out = g;
    out.remove_edge(x, y);
    for (NodeId a : h) {
        out.add_directed(y, a);
        if (out.is_undirected(x, a))
            out.add_directed(x, a);
    }
    return rebuild_pattern(out);
}

// ---------------------------------------------------------------------------
// Search.
// ---------------------------------------------------------------------------

struct FgesOptions {
    bool faithfulness_assumed = false;
    int workers = 1;
};

enum class FgesOp { Insert, Delete };

struct FgesStep {
    FgesOp op;
    NodeId x;
    NodeId y;
    std::vector<NodeId> subset;  // T for inserts, H for deletes
    double delta;
};

using FgesObserver = std::function<void(const FgesStep&, const MixedGraph&)>;

namespace detail {

/// Runs f(begin, end) over `count` items split into contiguous chunks.
template <class F>
void parallel_chunks(int workers, std::size_t count, F&& f) {
    std::size_t w = static_cast<std::size_t>(std::max(1, workers));
    if (w == 1 || count < 2 * w) {
        f(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> threads;
    std::size_t chunk = (count + w - 1) / w;
    for (std::size_t begin = 0; begin < count; begin += chunk)
        threads.emplace_back([&f, begin, end = std::min(count, begin + chunk)] { f(begin, end); });
    for (auto& t : threads)
        t.join();
}

}  // namespace detail

/// Greedy equivalence search over patterns with cached operators.
///
/// Pipeline: score every single-edge insertion into the empty graph (in
/// parallel) and keep the pairs with a positive delta as the screened
/// candidate set; forward phase over screened pairs; backward phase. Unless
/// faithfulness is assumed, a second forward phase over all nonadjacent
/// pairs and a second backward phase follow.
///
/// Operators are cached per (tail, head). After each applied operator the
/// heads whose neighbourhood could have changed (nodes with a changed
/// incident edge and their neighbours) are rescored. A cached operator is
/// rescored from scratch before it is applied, and once the queue drains a
/// full rescoring pass checks that nothing was missed.
template <EdgeScore S>
class Fges {
public:
    explicit Fges(const S& score, FgesOptions options = {})
        : m_score(score), m_options(options), m_graph(score.names()), m_num_vars(m_graph.num_nodes()) {
        if (options.workers < 1)
            throw std::invalid_argument("workers must be at least 1");
    }

    void set_observer(FgesObserver observer) { m_observer = std::move(observer); }

    MixedGraph search() {
        m_graph = MixedGraph(m_score.names());
        m_into.assign(static_cast<std::size_t>(m_num_vars), {});
        m_queue.clear();
        m_screened = true;

        initial_sweep();
        run_phase(FgesOp::Insert, /*seeded=*/true);
        run_phase(FgesOp::Delete, false);
        if (!m_options.faithfulness_assumed) {
            m_screened = false;
            run_phase(FgesOp::Insert, false);
            run_phase(FgesOp::Delete, false);
        }
        return m_graph;
    }

    /// Pairs kept by the initial single-edge screen, per node.
    const std::vector<std::vector<NodeId>>& screened_neighbors() const { return m_effect; }

private:
    struct Arrow {
        NodeId x;
        NodeId y;
        std::vector<NodeId> subset;
        double delta;
    };
    using Key = std::tuple<double, NodeId, NodeId>;  // (-delta, x, y)

    std::vector<NodeId> all_nodes() const {
        std::vector<NodeId> out(static_cast<std::size_t>(m_num_vars));
        for (NodeId i = 0; i < m_num_vars; ++i)
            out[static_cast<std::size_t>(i)] = i;
        return out;
    }

    void initial_sweep() {
        std::vector<std::pair<NodeId, NodeId>> pairs;
        for (NodeId x = 0; x < m_num_vars; ++x)
            for (NodeId y = x + 1; y < m_num_vars; ++y)
                pairs.emplace_back(x, y);
        std::vector<double> deltas(pairs.size());
        detail::parallel_chunks(m_options.workers, pairs.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                deltas[i] = m_score.edge_delta(pairs[i].first, pairs[i].second, {});
        });
        m_effect.assign(static_cast<std::size_t>(m_num_vars), {});
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (!(deltas[i] > 0.0))
                continue;
            auto [x, y] = pairs[i];
            m_effect[static_cast<std::size_t>(x)].push_back(y);
            m_effect[static_cast<std::size_t>(y)].push_back(x);
            put({x, y, {}, deltas[i]});
            put({y, x, {}, deltas[i]});
        }
        for (auto& e : m_effect)
            std::sort(e.begin(), e.end());
    }

    void run_phase(FgesOp op, bool seeded) {
        if (!seeded)
            rescore(op, all_nodes());
        while (drain(op))
            rescore(op, all_nodes());
        m_queue.clear();
        for (auto& m : m_into)
            m.clear();
    }

    std::optional<Arrow> best_insert(NodeId x, NodeId y, bool check_paths) const {
        const MixedGraph& g = m_graph;
        std::vector<NodeId> na = na_yx(g, x, y);
        std::vector<NodeId> parents = g.parents(y);
        std::vector<Arrow> options;
        for (auto& t : detail::clique_extensions(g, na, insert_pool(g, x, y))) {
            std::vector<NodeId> cond = detail::sorted_union(detail::sorted_union(na, t), parents);
            options.push_back({x, y, std::move(t), m_score.edge_delta(x, y, cond)});
        }
        std::sort(options.begin(), options.end(), [](const Arrow& a, const Arrow& b) {
            if (a.delta != b.delta)
                return a.delta > b.delta;
            return detail::smaller_subset(a.subset, b.subset);
        });
        for (auto& a : options) {
            if (!check_paths)
                return std::move(a);
            std::vector<NodeId> blocked = detail::sorted_union(na, a.subset);
            if (semidirected_paths_blocked(g, y, x, blocked))
                return std::move(a);
        }
        return std::nullopt;
    }

    std::optional<Arrow> best_delete(NodeId x, NodeId y) const {
        const MixedGraph& g = m_graph;
        std::vector<NodeId> na = na_yx(g, x, y);
        std::vector<NodeId> parents = g.parents(y);
        std::erase(parents, x);
        std::optional<Arrow> best;
        for (auto& kept : detail::clique_extensions(g, {}, na)) {
            std::vector<NodeId> h;
            std::set_difference(na.begin(), na.end(), kept.begin(), kept.end(), std::back_inserter(h));
            std::vector<NodeId> cond = detail::sorted_union(kept, parents);
            double delta = -m_score.edge_delta(x, y, cond);
            if (!best || delta > best->delta || (delta == best->delta && detail::smaller_subset(h, best->subset)))
                best = Arrow{x, y, std::move(h), delta};
        }
        return best;
    }

    std::vector<Arrow> arrows_into(FgesOp op, NodeId y) const {
        std::vector<Arrow> out;
        auto consider = [&](std::optional<Arrow> a) {
            if (a && a->delta > 0.0)
                out.push_back(std::move(*a));
        };
        if (op == FgesOp::Insert) {
            const auto& pool = m_screened ? m_effect[static_cast<std::size_t>(y)] : all_nodes_cache();
            for (NodeId x : pool)
                if (x != y && !m_graph.adjacent(x, y))
                    consider(best_insert(x, y, false));
        } else {
            for (NodeId x : m_graph.adjacencies(y))
                if (m_graph.is_directed(x, y) || m_graph.is_undirected(x, y))
                    consider(best_delete(x, y));
        }
        return out;
    }

    const std::vector<NodeId>& all_nodes_cache() const {
        if (static_cast<int>(m_all.size()) != m_num_vars)
            m_all = all_nodes();
        return m_all;
    }

    void rescore(FgesOp op, const std::vector<NodeId>& heads) {
        all_nodes_cache();
        std::vector<std::vector<Arrow>> found(heads.size());
        detail::parallel_chunks(m_options.workers, heads.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                found[i] = arrows_into(op, heads[i]);
        });
        for (std::size_t i = 0; i < heads.size(); ++i) {
            clear_head(heads[i]);
            for (auto& a : found[i])
                put(std::move(a));
        }
    }

    void clear_head(NodeId y) {
        auto& into = m_into[static_cast<std::size_t>(y)];
        for (auto& [x, a] : into)
            m_queue.erase({-a.delta, x, y});
        into.clear();
    }

    void put(Arrow a) {
        auto& slot = m_into[static_cast<std::size_t>(a.y)];
        auto it = slot.find(a.x);
        if (it != slot.end())
            m_queue.erase({-it->second.delta, a.x, a.y});
        m_queue.insert({-a.delta, a.x, a.y});
        slot[a.x] = std::move(a);
    }

    void drop(NodeId x, NodeId y) {
        auto& slot = m_into[static_cast<std::size_t>(y)];
        auto it = slot.find(x);
        if (it == slot.end())
            return;
        m_queue.erase({-it->second.delta, x, y});
        slot.erase(it);
    }

    /// Applies queued operators best-first. Returns whether any was applied.
    bool drain(FgesOp op) {
        bool applied = false;
        while (!m_queue.empty()) {
            auto [neg, x, y] = *m_queue.begin();
            const Arrow cached = m_into[static_cast<std::size_t>(y)].at(x);
            std::optional<Arrow> fresh = op == FgesOp::Insert ? best_insert(x, y, true) : best_delete(x, y);
            if (op == FgesOp::Insert ? m_graph.adjacent(x, y)
                                     : !(m_graph.is_directed(x, y) || m_graph.is_undirected(x, y)))
                fresh.reset();
            if (!fresh || !(fresh->delta > 0.0)) {
                drop(x, y);
                continue;
            }
            if (fresh->delta != cached.delta || fresh->subset != cached.subset) {
                put(std::move(*fresh));
                continue;
            }
            MixedGraph next = op == FgesOp::Insert ? apply_insert(m_graph, x, y, cached.subset)
                                                   : apply_delete(m_graph, x, y, cached.subset);
            std::vector<NodeId> heads = affected(m_graph, next);
            m_graph = std::move(next);
            drop(x, y);
            if (m_observer)
                m_observer(FgesStep{op, x, y, cached.subset, cached.delta}, m_graph);
            rescore(op, heads);
            applied = true;
        }
        return applied;
    }

    /// Nodes whose incident edges changed, plus their neighbours before and after.
    std::vector<NodeId> affected(const MixedGraph& before, const MixedGraph& after) const {
        std::vector<char> mark(static_cast<std::size_t>(m_num_vars), 0);
        std::vector<NodeId> changed;
        for (NodeId a = 0; a < m_num_vars; ++a) {
            const auto& pa = before.adjacencies(a);
            const auto& qa = after.adjacencies(a);
            bool same = pa == qa;
            for (std::size_t i = 0; same && i < pa.size(); ++i)
                same = before.mark_at(a, pa[i]) == after.mark_at(a, pa[i]) &&
                       before.mark_at(pa[i], a) == after.mark_at(pa[i], a);
            if (!same)
                changed.push_back(a);
        }
        for (NodeId a : changed) {
            mark[static_cast<std::size_t>(a)] = 1;
            for (NodeId b : before.adjacencies(a))
                mark[static_cast<std::size_t>(b)] = 1;
            for (NodeId b : after.adjacencies(a))
                mark[static_cast<std::size_t>(b)] = 1;
        }
        std::vector<NodeId> out;
        for (NodeId a = 0; a < m_num_vars; ++a)
            if (mark[static_cast<std::size_t>(a)])
                out.push_back(a);
        return out;
    }

    const S& m_score;
    FgesOptions m_options;
    MixedGraph m_graph;
    int m_num_vars;
    bool m_screened = true;
    std::vector<std::vector<NodeId>> m_effect;
    std::vector<std::map<NodeId, Arrow>> m_into;
    std::set<Key> m_queue;
    mutable std::vector<NodeId> m_all;
    FgesObserver m_observer;
};

struct FgesConfig {
    ScoreKind score;
    bool faithfulness_assumed = false;
    int workers = 1;
};

inline MixedGraph fges_search(const FgesConfig& config, const FgesObserver& observer = {}) {
    return std::visit(
        [&](const auto& score) {
            Fges search(score, FgesOptions{config.faithfulness_assumed, config.workers});
            if (observer)
                search.set_observer(observer);
            return search.search();
        },
        config.score);
}

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_FGES_HPP
