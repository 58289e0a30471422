#ifndef CAUSAL_BENCH_METRICS_HPP
#define CAUSAL_BENCH_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "graph.hpp"

namespace causal_bench {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

namespace detail {

inline void check_same_nodes(const Dag& truth, const MixedGraph& est) {
    if (truth.names() != est.names())
        throw std::invalid_argument("estimated graph and true DAG have different node sets");
}

/// Arrowhead at `b` on an edge a *-> b.
inline bool arrow_into(const MixedGraph& g, NodeId a, NodeId b) {
    return g.adjacent(a, b) && g.mark_at(a, b) == Mark::Arrow;
}

}  // namespace detail

/// Over unordered pairs.
inline ConfusionCounts adjacency_confusion(const Dag& truth, const MixedGraph& est) {
    detail::check_same_nodes(truth, est);
    ConfusionCounts c;
    const int v = truth.num_nodes();
    for (NodeId a = 0; a < v; ++a)
        for (NodeId b = a + 1; b < v; ++b) {
            bool t = truth.graph().adjacent(a, b);
            bool e = est.adjacent(a, b);
            if (t && e)
                ++c.tp;
            else if (e)
                ++c.fp;
            else if (t)
                ++c.fn;
            else
                ++c.tn;
        }
    return c;
}

/// Over the v(v-1) ordered pairs (x, y): an arrowhead at y on an estimated
/// edge x *-> y against a true edge x -> y.
inline ConfusionCounts arrowhead_confusion(const Dag& truth, const MixedGraph& est) {
    detail::check_same_nodes(truth, est);
    ConfusionCounts c;
    const int v = truth.num_nodes();
    for (NodeId x = 0; x < v; ++x)
        for (NodeId y = 0; y < v; ++y) {
            if (x == y)
                continue;
            bool t = truth.has_edge(x, y);
            bool e = detail::arrow_into(est, x, y);
            if (t && e)
                ++c.tp;
            else if (e)
                ++c.fp;
            else if (t)
                ++c.fn;
            else
                ++c.tn;
        }
    return c;
}

inline std::optional<double> precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0)
        return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

inline std::optional<double> recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0)
        return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

/// Matthews correlation; 0 when any marginal is empty.
inline double matthews(const ConfusionCounts& c) {
    const double tp = static_cast<double>(c.tp);
    const double fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn);
    const double tn = static_cast<double>(c.tn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0)
        return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

struct PrecisionRecall {
    std::optional<double> ap;
    std::optional<double> ar;
    std::optional<double> ahp;
    std::optional<double> ahr;
};

inline PrecisionRecall precision_recall(const ConfusionCounts& adjacency, const ConfusionCounts& arrowhead) {
    return {precision(adjacency), recall(adjacency), precision(arrowhead), recall(arrowhead)};
}

struct GraphStats {
    ConfusionCounts adjacency;
    ConfusionCounts arrowhead;
    std::optional<double> ap;
    std::optional<double> ar;
    std::optional<double> ahp;
    std::optional<double> ahr;
    double mcadj = 0.0;
    double mcarrow = 0.0;
};

/// All table statistics for one estimate. `est` is matched to the truth by
/// node name, so column order of the data it came from does not matter.
inline GraphStats graph_stats(const Dag& truth, const MixedGraph& est) {
    MixedGraph aligned = est.names() == truth.names() ? est : est.reindexed(truth.names());
    GraphStats s;
    s.adjacency = adjacency_confusion(truth, aligned);
    s.arrowhead = arrowhead_confusion(truth, aligned);
    auto pr = precision_recall(s.adjacency, s.arrowhead);
    s.ap = pr.ap;
    s.ar = pr.ar;
    s.ahp = pr.ahp;
    s.ahr = pr.ahr;
    s.mcadj = matthews(s.adjacency);
    s.mcarrow = matthews(s.arrowhead);
    return s;
}

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_METRICS_HPP
