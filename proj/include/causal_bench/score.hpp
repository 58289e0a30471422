#ifndef CAUSAL_BENCH_SCORE_HPP
#define CAUSAL_BENCH_SCORE_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "graph.hpp"
#include "indtest.hpp"

namespace causal_bench {

/// Local SEM-BIC term -n ln(sigma^2_{node|parents}) - c |parents| ln n.
/// Summed over nodes this is 2L - c k ln n up to a model-independent constant.
inline double sem_bic_local(const CorrMatrix& c, NodeId node, std::span<const NodeId> parents, double penalty) {
    for (NodeId p : parents)
        if (p == node)
            throw std::invalid_argument("node listed among its own parents");
    const double n = c.sample_size();
    double var = residual_variance(c, node, parents);
    return -n * std::log(var) - penalty * static_cast<double>(parents.size()) * std::log(n);
}

/// alpha - p for the test of x _||_ y | cond; positive means dependence.
inline double fisher_z_local_delta(const CorrMatrix& c, NodeId x, NodeId y, std::span<const NodeId> cond, double alpha) {
    return alpha - fisher_z_test(c, x, y, cond, alpha).p_value;
}

/// +1 for d-connection of x and y given cond, -1 for d-separation.
inline double dsep_oracle_delta(const Dag& dag, NodeId x, NodeId y, std::span<const NodeId> cond) {
    return d_separated(dag, x, y, cond) ? -1.0 : 1.0;
}

/// Score interface consumed by FGES: the gain of adding x as a parent of y
/// whose other parents are `cond`.
template <class S>
concept EdgeScore = requires(const S& s, NodeId x, std::span<const NodeId> cond) {
    { s.edge_delta(x, x, cond) } -> std::convertible_to<double>;
    { s.names() } -> std::convertible_to<const std::vector<std::string>&>;
};

class SemBicScore {
public:
    SemBicScore(std::shared_ptr<const CorrMatrix> corr, double penalty_discount)
        : m_corr(std::move(corr)), m_penalty(penalty_discount) {
        if (!(penalty_discount > 0.0))
            throw std::invalid_argument("penalty discount must be positive");
    }
    SemBicScore(CorrMatrix corr, double penalty_discount)
        : SemBicScore(std::make_shared<const CorrMatrix>(std::move(corr)), penalty_discount) {}

    double local(NodeId node, std::span<const NodeId> parents) const {
        return sem_bic_local(*m_corr, node, parents, m_penalty);
    }

    double edge_delta(NodeId x, NodeId y, std::span<const NodeId> cond) const {
        std::vector<NodeId> with(cond.begin(), cond.end());
        with.push_back(x);
        return local(y, with) - local(y, cond);
    }

    const std::vector<std::string>& names() const { return m_corr->names(); }
    double penalty_discount() const { return m_penalty; }

private:
    std::shared_ptr<const CorrMatrix> m_corr;
    double m_penalty;
};

/// Not a proper score: used only where a dependence decision is needed.
class FisherZScore {
public:
    FisherZScore(std::shared_ptr<const CorrMatrix> corr, double alpha) : m_corr(std::move(corr)), m_alpha(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    FisherZScore(CorrMatrix corr, double alpha)
        : FisherZScore(std::make_shared<const CorrMatrix>(std::move(corr)), alpha) {}

    double edge_delta(NodeId x, NodeId y, std::span<const NodeId> cond) const {
        return fisher_z_local_delta(*m_corr, x, y, cond, m_alpha);
    }
    const std::vector<std::string>& names() const { return m_corr->names(); }
    double alpha() const { return m_alpha; }

private:
    std::shared_ptr<const CorrMatrix> m_corr;
    double m_alpha;
};

class DsepScore {
public:
    explicit DsepScore(Dag dag) : m_dag(std::move(dag)) {}

    double edge_delta(NodeId x, NodeId y, std::span<const NodeId> cond) const {
        return dsep_oracle_delta(m_dag, x, y, cond);
    }
    const std::vector<std::string>& names() const { return m_dag.names(); }
    const Dag& dag() const { return m_dag; }

private:
    Dag m_dag;
};

using ScoreKind = std::variant<SemBicScore, FisherZScore, DsepScore>;

/// Sum of local SEM-BIC terms over a DAG.
inline double sem_bic_total(const SemBicScore& score, const Dag& dag) {
    double total = 0.0;
    for (NodeId y = 0; y < dag.num_nodes(); ++y)
        total += score.local(y, dag.parents(y));
    return total;
}

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_SCORE_HPP
