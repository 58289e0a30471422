#ifndef CAUSAL_BENCH_PC_HPP
#define CAUSAL_BENCH_PC_HPP

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "indtest.hpp"

namespace causal_bench {

/// How a collider that contradicts an earlier orientation is handled.
///   Priority   keep the earlier arrowheads and skip the new collider
///   Overwrite  re-point both edges into the new collider's middle node
///   Bidirected add the new arrowheads, possibly yielding x <-> y
enum class ConflictRule { Priority, Overwrite, Bidirected };

enum class ColliderStrategy { Sepset, Conservative, MaxP };

enum class TripleKind { Collider, Noncollider, Ambiguous };

/// Unshielded triple x - y - z (x, z nonadjacent), stored with x < z.
struct Triple {
    NodeId x;
    NodeId y;
    NodeId z;

    friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleMark {
    Triple triple;
    TripleKind kind;
};

/// Separating sets recorded during adjacency search, keyed by unordered pair.
class SepsetMap {
public:
    void set(NodeId x, NodeId y, std::vector<NodeId> s) {
        std::sort(s.begin(), s.end());
        m_sets[key(x, y)] = std::move(s);
    }

    const std::vector<NodeId>* find(NodeId x, NodeId y) const {
        auto it = m_sets.find(key(x, y));
        return it == m_sets.end() ? nullptr : &it->second;
    }

    bool contains(NodeId x, NodeId y) const { return m_sets.count(key(x, y)) > 0; }
    std::size_t size() const { return m_sets.size(); }

private:
    static std::pair<NodeId, NodeId> key(NodeId x, NodeId y) { return {std::min(x, y), std::max(x, y)}; }

    std::map<std::pair<NodeId, NodeId>, std::vector<NodeId>> m_sets;
};

struct PcVariant {
    bool stable = false;
    ColliderStrategy orientation = ColliderStrategy::Sepset;
    ConflictRule conflict = ConflictRule::Priority;
    double alpha = 0.01;

    static PcVariant pc(double alpha) { return {false, ColliderStrategy::Sepset, ConflictRule::Priority, alpha}; }
    static PcVariant pc_stable(double alpha) { return {true, ColliderStrategy::Sepset, ConflictRule::Priority, alpha}; }
    static PcVariant pc_stable_max(double alpha) { return {true, ColliderStrategy::MaxP, ConflictRule::Priority, alpha}; }
    static PcVariant cpc(double alpha) { return {false, ColliderStrategy::Conservative, ConflictRule::Priority, alpha}; }
    static PcVariant cpc_stable(double alpha) {
        return {true, ColliderStrategy::Conservative, ConflictRule::Priority, alpha};
    }

    /// Harness name: pc, pc-stable, pc-stable-max, cpc or cpc-stable.
    std::string name() const {
        switch (orientation) {
            case ColliderStrategy::Sepset:
                return stable ? "pc-stable" : "pc";
            case ColliderStrategy::Conservative:
                return stable ? "cpc-stable" : "cpc";
            case ColliderStrategy::MaxP:
                return stable ? "pc-stable-max" : "pc-max";
        }
        return "pc";
    }
};

inline std::string to_string(ConflictRule r) {
    switch (r) {
        case ConflictRule::Priority:
            return "priority";
        case ConflictRule::Overwrite:
            return "overwrite";
        case ConflictRule::Bidirected:
            return "bidirected";
    }
    return "priority";
}

inline ConflictRule parse_conflict_rule(const std::string& s) {
    if (s == "priority")
        return ConflictRule::Priority;
    if (s == "overwrite")
        return ConflictRule::Overwrite;
    if (s == "bidirected")
        return ConflictRule::Bidirected;
    throw std::invalid_argument("unknown conflict rule '" + s + "'");
}

/// Unshielded triples ordered by (y, x, z).
inline std::vector<Triple> unshielded_triples(const MixedGraph& g) {
    std::vector<Triple> out;
    for (NodeId y = 0; y < g.num_nodes(); ++y) {
        const auto& adj = g.adjacencies(y);
        for (std::size_t i = 0; i < adj.size(); ++i)
            for (std::size_t j = i + 1; j < adj.size(); ++j)
                if (!g.adjacent(adj[i], adj[j]))
                    out.push_back({adj[i], y, adj[j]});
    }
    return out;
}

namespace detail {

/// Calls f(subset) for each size-k subset of `pool` in lexicographic order
/// of positions; stops early when f returns true. Returns whether it stopped.
template <class F>
bool for_each_subset(const std::vector<NodeId>& pool, std::size_t k, F&& f) {
    if (k > pool.size())
        return false;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i)
        idx[i] = i;
    std::vector<NodeId> subset(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i)
            subset[i] = pool[idx[i]];
        if (f(std::as_const(subset)))
            return true;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == pool.size() - k + (i - 1))
            --i;
        if (i == 0)
            return false;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

inline std::vector<NodeId> without(const std::vector<NodeId>& v, NodeId drop) {
    std::vector<NodeId> out;
    out.reserve(v.size());
    for (NodeId a : v)
        if (a != drop)
            out.push_back(a);
    return out;
}

inline bool contains(const std::vector<NodeId>& sorted, NodeId a) {
    return std::binary_search(sorted.begin(), sorted.end(), a);
}

/// All subsets (every size) of adj(x) and of adj(z) in the skeleton,
/// deduplicated, ordered by size then lexicographically.
inline std::vector<std::vector<NodeId>> candidate_sepsets(const MixedGraph& skel, NodeId x, NodeId z) {
    std::set<std::pair<std::size_t, std::vector<NodeId>>> uniq;
    for (NodeId end : {x, z}) {
        std::vector<NodeId> pool = without(skel.adjacencies(end), end == x ? z : x);
        for (std::size_t k = 0; k <= pool.size(); ++k)
            for_each_subset(pool, k, [&](const std::vector<NodeId>& s) {
                uniq.emplace(k, s);
                return false;
            });
    }
    std::vector<std::vector<NodeId>> out;
    out.reserve(uniq.size());
    for (auto& [size, s] : uniq)
        out.push_back(s);
    return out;
}

inline std::vector<std::string> names_of(const MixedGraph& g, const std::vector<NodeId>& s) {
    std::vector<std::string> out;
    for (NodeId a : s)
        out.push_back(g.name(a));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

struct AdjacencySearchResult {
    MixedGraph skeleton;
    SepsetMap sepsets;
};

/// Removes edges from the complete graph by testing x _||_ y | S for S of
/// growing size d drawn from adj(x) \ {y}. The first separating set found
/// (subsets in lexicographic order) is recorded. With `stable`, adjacency
/// lists are frozen at the start of each depth.
template <IndependenceTest T>
AdjacencySearchResult adjacency_search(const T& test, bool stable) {
    MixedGraph g(test.names());
    const int v = g.num_nodes();
    for (NodeId a = 0; a < v; ++a)
        for (NodeId b = a + 1; b < v; ++b)
            g.add_undirected(a, b);
    SepsetMap sepsets;

    for (std::size_t depth = 0;; ++depth) {
        std::vector<std::vector<NodeId>> frozen;
        if (stable) {
            frozen.reserve(static_cast<std::size_t>(v));
            for (NodeId x = 0; x < v; ++x)
                frozen.push_back(g.adjacencies(x));
        }
        for (NodeId x = 0; x < v; ++x) {
            const std::vector<NodeId> adjx = stable ? frozen[static_cast<std::size_t>(x)] : g.adjacencies(x);
            for (NodeId y : adjx) {
                if (!g.adjacent(x, y))
                    continue;
                std::vector<NodeId> pool =
                    detail::without(stable ? frozen[static_cast<std::size_t>(x)] : g.adjacencies(x), y);
                if (pool.size() < depth)
                    continue;
                std::vector<NodeId> found;
                bool separated = detail::for_each_subset(pool, depth, [&](const std::vector<NodeId>& s) {
                    if (!test.test(x, y, s).independent)
                        return false;
                    found = s;
                    return true;
                });
                if (separated) {
                    g.remove_edge(x, y);
                    sepsets.set(x, y, std::move(found));
                }
            }
        }
        bool deeper = false;
        for (NodeId x = 0; x < v && !deeper; ++x)
            deeper = g.adjacencies(x).size() > depth + 1;
        if (!deeper)
            break;
    }
    return {std::move(g), std::move(sepsets)};
}

/// Orients x -> y <- z in `g` under `rule`. Returns false when the priority
/// rule refuses because an arrowhead already points at x or z.
inline bool apply_collider(MixedGraph& g, const Triple& t, ConflictRule rule) {
    switch (rule) {
        case ConflictRule::Priority:
            if (g.mark_at(t.y, t.x) == Mark::Arrow || g.mark_at(t.y, t.z) == Mark::Arrow)
                return false;
            g.set_mark(t.x, t.y, Mark::Arrow);
            g.set_mark(t.z, t.y, Mark::Arrow);
            return true;
        case ConflictRule::Overwrite:
            g.add_directed(t.x, t.y);
            g.add_directed(t.z, t.y);
            return true;
        case ConflictRule::Bidirected:
            g.set_mark(t.x, t.y, Mark::Arrow);
            g.set_mark(t.z, t.y, Mark::Arrow);
            return true;
    }
    return false;
}

/// PC collider orientation: x -> y <- z whenever y is not in sepset(x, z).
inline MixedGraph orient_colliders_sepset(const MixedGraph& skeleton, const SepsetMap& sepsets, ConflictRule rule) {
    MixedGraph g = skeleton;
    for (const Triple& t : unshielded_triples(skeleton)) {
        const auto* s = sepsets.find(t.x, t.z);
        if (s && !detail::contains(*s, t.y))
            apply_collider(g, t, rule);
    }
    return g;
}

namespace detail {

/// Applies colliders in an order keyed by node names so that the outcome
/// does not depend on column order.
inline void apply_by_name(MixedGraph& g, std::vector<Triple> colliders, ConflictRule rule) {
    std::sort(colliders.begin(), colliders.end(), [&](const Triple& a, const Triple& b) {
        return std::tie(g.name(a.y), g.name(a.x), g.name(a.z)) < std::tie(g.name(b.y), g.name(b.x), g.name(b.z));
    });
    for (const Triple& t : colliders)
        apply_collider(g, t, rule);
}

inline Triple name_ordered(const MixedGraph& g, Triple t) {
    if (g.name(t.z) < g.name(t.x))
        std::swap(t.x, t.z);
    return t;
}

}  // namespace detail

struct ConservativeOrientation {
    MixedGraph graph;
    std::vector<TripleMark> marks;
};

/// Classifies one unshielded triple by the separating sets of x and z found
/// among all subsets of adj(x) and adj(z).
template <IndependenceTest T>
TripleKind classify_triple(const MixedGraph& skeleton, const T& test, const Triple& t) {
    bool with_y = false;
    bool without_y = false;
    for (const auto& s : detail::candidate_sepsets(skeleton, t.x, t.z)) {
        if (!test.test(t.x, t.z, s).independent)
            continue;
        (detail::contains(s, t.y) ? with_y : without_y) = true;
        if (with_y && without_y)
            return TripleKind::Ambiguous;
    }
    if (without_y && !with_y)
        return TripleKind::Collider;
    if (with_y && !without_y)
        return TripleKind::Noncollider;
    return TripleKind::Ambiguous;
}

/// CPC orientation. Only unanimous colliders are oriented; ambiguous
/// triples are left as noncolliders.
template <IndependenceTest T>
ConservativeOrientation orient_colliders_cpc(const MixedGraph& skeleton, const T& test, ConflictRule rule) {
    ConservativeOrientation out{skeleton, {}};
    std::vector<Triple> colliders;
    for (const Triple& t : unshielded_triples(skeleton)) {
        TripleKind kind = classify_triple(skeleton, test, t);
        out.marks.push_back({t, kind});
        if (kind == TripleKind::Collider)
            colliders.push_back(detail::name_ordered(skeleton, t));
    }
    detail::apply_by_name(out.graph, std::move(colliders), rule);
    return out;
}

/// Max-P orientation: for each triple pick the candidate set with the
/// largest p-value (ties: smaller set, then set of names); collider iff that
/// set separates x and z and omits y. Colliders are applied in decreasing
/// p-value order.
template <IndependenceTest T>
MixedGraph orient_colliders_maxp(const MixedGraph& skeleton, const T& test, ConflictRule rule) {
    struct Candidate {
        Triple triple;
        double p;
    };
    std::vector<Candidate> colliders;
    for (const Triple& t : unshielded_triples(skeleton)) {
        const std::vector<NodeId>* best = nullptr;
        IndResult best_result{false, -1.0, 0.0};
        std::vector<std::string> best_names;
        auto sets = detail::candidate_sepsets(skeleton, t.x, t.z);
        for (const auto& s : sets) {
            IndResult r = test.test(t.x, t.z, s);
            bool better = false;
            if (!best || r.p_value > best_result.p_value) {
                better = true;
            } else if (r.p_value == best_result.p_value) {
                if (s.size() < best->size())
                    better = true;
                else if (s.size() == best->size())
                    better = detail::names_of(skeleton, s) < best_names;
            }
            if (better) {
                best = &s;
                best_result = r;
                best_names = detail::names_of(skeleton, s);
            }
        }
        if (best && best_result.independent && !detail::contains(*best, t.y))
            colliders.push_back({detail::name_ordered(skeleton, t), best_result.p_value});
    }
    MixedGraph g = skeleton;
    std::stable_sort(colliders.begin(), colliders.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.p != b.p)
            return a.p > b.p;
        const Triple& s = a.triple;
        const Triple& t = b.triple;
        return std::tie(g.name(s.y), g.name(s.x), g.name(s.z)) < std::tie(g.name(t.y), g.name(t.x), g.name(t.z));
    });
    for (const Candidate& c : colliders)
        apply_collider(g, c.triple, rule);
    return g;
}

/// Adjacency search, collider orientation, then the Meek closure.
template <IndependenceTest T>
MixedGraph run_pc(const PcVariant& variant, const T& test) {
    auto adj = adjacency_search(test, variant.stable);
    MixedGraph g;
    switch (variant.orientation) {
        case ColliderStrategy::Sepset:
            g = orient_colliders_sepset(adj.skeleton, adj.sepsets, variant.conflict);
            break;
        case ColliderStrategy::Conservative:
            g = orient_colliders_cpc(adj.skeleton, test, variant.conflict).graph;
            break;
        case ColliderStrategy::MaxP:
            g = orient_colliders_maxp(adj.skeleton, test, variant.conflict);
            break;
    }
    return meek_closure(std::move(g));
}

/// Runs `variant` on data with the Fisher Z test at the variant's alpha.
inline MixedGraph run_pc(const PcVariant& variant, const DataSet& data) {
    return run_pc(variant, FisherZTest(correlation_matrix(data), variant.alpha));
}

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_PC_HPP
