#include <gtest/gtest.h>

#include <map>
#include <set>
#include <tuple>

#include "causal_bench/graph.hpp"
#include "causal_bench/rng.hpp"
#include "causal_bench/simulate.hpp"
#include "oracles.hpp"

using namespace causal_bench;

namespace {

Dag chain3() { return Dag(3, {{0, 1}, {1, 2}}); }
Dag collider3() { return Dag(3, {{0, 1}, {2, 1}}); }

std::vector<std::vector<NodeId>> subsets_without(int n, NodeId x, NodeId y, int max_size) {
    std::vector<std::vector<NodeId>> out;
    for (int mask = 0; mask < (1 << n); ++mask) {
        if (mask & ((1 << x) | (1 << y)))
            continue;
        std::vector<NodeId> s;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i))
                s.push_back(i);
        if (static_cast<int>(s.size()) <= max_size)
            out.push_back(s);
    }
    return out;
}

}  // namespace

TEST(MixedGraph, AdjacencyIgnoresMarks) {
    MixedGraph g(3);
    EXPECT_FALSE(adjacent(g, 0, 1));
    g.add_directed(0, 1);
    EXPECT_TRUE(adjacent(g, 1, 0));
    g.add_bidirected(1, 2);
    EXPECT_TRUE(adjacent(g, 1, 2));
    EXPECT_THROW(g.adjacent(0, 7), std::out_of_range);
}

TEST(MixedGraph, MarksAndQueries) {
    MixedGraph g(4);
    g.add_directed(0, 1);
    g.add_undirected(1, 2);
    g.add_bidirected(2, 3);
    EXPECT_EQ(g.mark_at(0, 1), Mark::Arrow);
    EXPECT_EQ(g.mark_at(1, 0), Mark::Tail);
    EXPECT_TRUE(g.is_directed(0, 1));
    EXPECT_FALSE(g.is_directed(1, 0));
    EXPECT_TRUE(g.is_undirected(2, 1));
    EXPECT_TRUE(g.is_bidirected(3, 2));
    EXPECT_EQ(g.parents(1), std::vector<NodeId>{0});
    EXPECT_EQ(g.children(0), std::vector<NodeId>{1});
    EXPECT_EQ(g.undirected_neighbors(1), std::vector<NodeId>{2});
    EXPECT_EQ(g.num_edges(), 3u);
    g.remove_edge(1, 2);
    EXPECT_EQ(g.num_edges(), 2u);
    EXPECT_FALSE(g.adjacent(1, 2));
}

TEST(MixedGraph, RejectsSelfLoopsAndDuplicateNames) {
    MixedGraph g(2);
    EXPECT_THROW(g.add_directed(1, 1), std::invalid_argument);
    EXPECT_THROW(MixedGraph(std::vector<std::string>{"A", "A"}), std::invalid_argument);
}

TEST(MixedGraph, ReindexedKeepsEdgesByName) {
    MixedGraph g(std::vector<std::string>{"A", "B", "C"});
    g.add_directed(0, 1);
    g.add_undirected(1, 2);
    MixedGraph r = g.reindexed({"C", "A", "B"});
    EXPECT_TRUE(r.is_directed(r.index_of("A"), r.index_of("B")));
    EXPECT_TRUE(r.is_undirected(r.index_of("B"), r.index_of("C")));
    EXPECT_EQ(r.reindexed({"A", "B", "C"}), g);
}

TEST(Dag, RejectsCyclesAndUndirectedEdges) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    g.add_directed(2, 0);
    EXPECT_THROW(Dag{g}, std::invalid_argument);
    MixedGraph u(2);
    u.add_undirected(0, 1);
    EXPECT_THROW(Dag{u}, std::invalid_argument);
}

TEST(TopologicalOrder, EmptyAndChain) {
    EXPECT_EQ(topological_order(MixedGraph(3)), (std::vector<NodeId>{0, 1, 2}));
    EXPECT_EQ(topological_order(chain3()), (std::vector<NodeId>{0, 1, 2}));
}

TEST(TopologicalOrder, CycleNamesAMember) {
    MixedGraph g(std::vector<std::string>{"A", "B", "C", "D"});
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    g.add_directed(2, 3);
    g.add_directed(3, 1);
    try {
        topological_order(g);
        FAIL() << "expected a cycle error";
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        EXPECT_TRUE(msg.find('B') != std::string::npos || msg.find('C') != std::string::npos ||
                    msg.find('D') != std::string::npos)
            << msg;
    }
}

TEST(TopologicalOrder, EdgesPointForwardOnRandomDags) {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Dag d = random_dag(30, 4, rng);
        auto order = topological_order(d.graph());
        std::vector<int> pos(order.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            pos[order[i]] = static_cast<int>(i);
        for (const Edge& e : d.graph().edges()) {
            NodeId from = e.at_b == Mark::Arrow ? e.a : e.b;
            NodeId to = e.at_b == Mark::Arrow ? e.b : e.a;
            EXPECT_LT(pos[from], pos[to]);
        }
    }
}

TEST(DSeparation, ChainAndCollider) {
    EXPECT_TRUE(d_separated(chain3(), 0, 2, {1}));
    EXPECT_FALSE(d_separated(chain3(), 0, 2, {}));
    EXPECT_TRUE(d_separated(collider3(), 0, 2, {}));
    EXPECT_FALSE(d_separated(collider3(), 0, 2, {1}));
}

TEST(DSeparation, DescendantOfColliderOpensPath) {
    Dag d(4, {{0, 1}, {2, 1}, {1, 3}});
    EXPECT_FALSE(d_separated(d, 0, 2, {3}));
}

TEST(DSeparation, RejectsBadQueries) {
    EXPECT_THROW(d_separated(chain3(), 0, 0, {}), std::invalid_argument);
    EXPECT_THROW(d_separated(chain3(), 0, 2, {0}), std::invalid_argument);
}

TEST(DSeparation, AgreesWithPathEnumeration) {
    Rng rng(11);
    for (int trial = 0; trial < 4; ++trial) {
        Dag d = random_dag(8, 3, rng);
        for (NodeId x = 0; x < 8; ++x)
            for (NodeId y = x + 1; y < 8; ++y)
                for (const auto& z : subsets_without(8, x, y, 3)) {
                    bool fast = d_separated(d, x, y, z);
                    bool slow = oracle::dsep_by_paths(d, x, y, std::set<int>(z.begin(), z.end()));
                    ASSERT_EQ(fast, slow) << "x=" << x << " y=" << y;
                    ASSERT_EQ(fast, d_separated(d, y, x, z));
                }
    }
}

TEST(Cpdag, ColliderKeptChainUnoriented) {
    EXPECT_EQ(cpdag_of(collider3()), collider3().graph());
    MixedGraph expected(3);
    expected.add_undirected(0, 1);
    expected.add_undirected(1, 2);
    EXPECT_EQ(cpdag_of(chain3()), expected);
}

TEST(Cpdag, ThreeNodeEquivalenceClasses) {
    auto dags = oracle::all_dags(3);
    ASSERT_EQ(dags.size(), 25u);
    for (const Dag& a : dags)
        for (const Dag& b : dags)
            EXPECT_EQ(cpdag_of(a) == cpdag_of(b), oracle::signature(a) == oracle::signature(b));
}

TEST(Cpdag, MatchesEnumeratedClassesOnFourNodes) {
    auto dags = oracle::all_dags(4);
    ASSERT_EQ(dags.size(), 543u);
    for (const Dag& d : dags)
        ASSERT_EQ(cpdag_of(d), oracle::cpdag_by_enumeration(d, dags));
}

TEST(Cpdag, FourNodeMarkovEquivalenceByDsep) {
    auto dags = oracle::all_dags(4);
    auto relations = [](const Dag& d) {
        std::vector<bool> r;
        for (NodeId x = 0; x < 4; ++x)
            for (NodeId y = x + 1; y < 4; ++y)
                for (const auto& z : subsets_without(4, x, y, 2))
                    r.push_back(d_separated(d, x, y, z));
        return r;
    };
    std::map<std::vector<bool>, MixedGraph> by_relations;
    std::size_t classes = 0;
    for (const Dag& d : dags) {
        auto [it, inserted] = by_relations.emplace(relations(d), cpdag_of(d));
        if (inserted)
            ++classes;
        else
            ASSERT_EQ(it->second, cpdag_of(d));
    }
    std::set<std::vector<std::tuple<int, int, int, int>>> distinct;
    for (const Dag& d : dags) {
        std::vector<std::tuple<int, int, int, int>> key;
        for (const Edge& e : cpdag_of(d).edges())
            key.emplace_back(e.a, e.b, static_cast<int>(e.at_a), static_cast<int>(e.at_b));
        distinct.insert(key);
    }
    EXPECT_EQ(distinct.size(), classes);
    EXPECT_EQ(classes, 185u);
}

TEST(Cpdag, SkeletonAndDirectedEdgesAgreeWithDag) {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        Dag d = random_dag(15, 3, rng);
        MixedGraph c = cpdag_of(d);
        EXPECT_EQ(c.skeleton(), d.graph().skeleton());
        for (const Edge& e : c.edges()) {
            if (e.at_b == Mark::Arrow && e.at_a == Mark::Tail) {
                EXPECT_TRUE(d.has_edge(e.a, e.b));
            }
            if (e.at_a == Mark::Arrow && e.at_b == Mark::Tail) {
                EXPECT_TRUE(d.has_edge(e.b, e.a));
            }
        }
    }
}

TEST(Meek, RuleOne) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_undirected(1, 2);
    MixedGraph m = meek_closure(g);
    EXPECT_TRUE(m.is_directed(1, 2));
}

TEST(Meek, RuleTwo) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    g.add_undirected(0, 2);
    EXPECT_TRUE(meek_closure(g).is_directed(0, 2));
}

TEST(Meek, RuleThree) {
    // a - b, a - c, a - d, c -> b <- d, c and d nonadjacent  =>  a -> b
    MixedGraph g(4);
    g.add_undirected(0, 1);
    g.add_undirected(0, 2);
    g.add_undirected(0, 3);
    g.add_directed(2, 1);
    g.add_directed(3, 1);
    MixedGraph m = meek_closure(g);
    EXPECT_TRUE(m.is_directed(0, 1));
    EXPECT_TRUE(m.is_undirected(0, 2));
}

TEST(Meek, RuleFour) {
    // a - b, a - c, a - d, d -> c -> b, b and d nonadjacent  =>  a -> b
    MixedGraph g(4);
    g.add_undirected(0, 1);
    g.add_undirected(0, 2);
    g.add_undirected(0, 3);
    g.add_directed(3, 2);
    g.add_directed(2, 1);
    EXPECT_TRUE(meek_closure(g).is_directed(0, 1));
}

TEST(Meek, IdempotentAndMonotone) {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        Dag d = random_dag(12, 3, rng);
        MixedGraph p = collider_pattern(d.graph());
        MixedGraph m = meek_closure(p);
        EXPECT_EQ(meek_closure(m), m);
        for (const Edge& e : p.edges())
            if (e.at_a != e.at_b) {
                EXPECT_EQ(m.mark_at(e.a, e.b), e.at_b);
                EXPECT_EQ(m.mark_at(e.b, e.a), e.at_a);
            }
    }
}

TEST(Meek, LeavesBidirectedEdgesAlone) {
    MixedGraph g(3);
    g.add_bidirected(0, 1);
    g.add_undirected(1, 2);
    MixedGraph m = meek_closure(g);
    EXPECT_TRUE(m.is_bidirected(0, 1));
    EXPECT_TRUE(m.is_undirected(1, 2));
}

TEST(ConsistentExtension, IsMemberOfTheClass) {
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        Dag d = random_dag(12, 4, rng);
        Dag e = consistent_extension(cpdag_of(d));
        EXPECT_EQ(cpdag_of(e), cpdag_of(d));
    }
}
