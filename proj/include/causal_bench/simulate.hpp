#ifndef CAUSAL_BENCH_SIMULATE_HPP
#define CAUSAL_BENCH_SIMULATE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"

namespace causal_bench {

/// n x v sample matrix; row i is sample i, column j is variable names[j].
struct DataSet {
    std::vector<std::string> names;
    Eigen::MatrixXd values;

    int num_samples() const { return static_cast<int>(values.rows()); }
    int num_vars() const { return static_cast<int>(values.cols()); }

    void validate() const {
        if (static_cast<Eigen::Index>(names.size()) != values.cols())
            throw std::invalid_argument("dataset has " + std::to_string(values.cols()) + " columns but " +
                                        std::to_string(names.size()) + " names");
        if (!values.allFinite())
            throw std::invalid_argument("dataset contains non-finite values");
    }
};

/// Linear Gaussian SEM: X_j = sum_p coef(p, j) X_p + e_j, e_j ~ N(0, error_variance(j)).
struct SemModel {
    Dag dag;
    Eigen::MatrixXd coef;  // coef(p, j) for p -> j, zero elsewhere
    Eigen::VectorXd error_variance;

    double coefficient(NodeId from, NodeId to) const { return coef(from, to); }

    /// Population covariance (I - B)^{-T} Omega (I - B)^{-1} with B = coef.
    Eigen::MatrixXd implied_covariance() const {
        const Eigen::Index v = coef.rows();
        Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(v, v) - coef).inverse();
        return inv.transpose() * error_variance.asDiagonal() * inv;
    }
};

struct ParamRanges {
    double coef_lo = 0.2;
    double coef_hi = 0.9;
    double variance_lo = 1.0;
    double variance_hi = 3.0;
    bool random_signs = false;  // flip each coefficient's sign with probability 1/2
};

/// Random DAG over X1..Xv with exactly vars*avg_degree/2 edges, each a
/// forward pair (i < j) of the index order drawn uniformly without
/// replacement (Floyd's algorithm over the C(v,2) pair indices).
inline Dag random_dag(int vars, int avg_degree, Rng& rng) {
    if (vars < 2)
        throw std::invalid_argument("random_dag needs at least two variables");
    if (avg_degree < 0)
        throw std::invalid_argument("average degree must be nonnegative");
    const std::uint64_t pairs = static_cast<std::uint64_t>(vars) * static_cast<std::uint64_t>(vars - 1) / 2;
    const std::uint64_t target = static_cast<std::uint64_t>(vars) * static_cast<std::uint64_t>(avg_degree) / 2;
    if (target > pairs)
        throw std::invalid_argument("requested " + std::to_string(target) + " edges but only " +
                                    std::to_string(pairs) + " forward pairs exist");

    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(target) * 2);
    for (std::uint64_t j = pairs - target; j < pairs; ++j) {
        std::uint64_t t = rng.uniform_index(j + 1);
        if (!chosen.insert(t).second)
            chosen.insert(j);
    }
    std::vector<std::uint64_t> sorted(chosen.begin(), chosen.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(sorted.size());
    NodeId i = 0;
    std::uint64_t row_start = 0;
    std::uint64_t row_len = static_cast<std::uint64_t>(vars - 1);
    for (std::uint64_t k : sorted) {
        while (k >= row_start + row_len) {
            row_start += row_len;
            --row_len;
            ++i;
        }
        edges.emplace_back(i, static_cast<NodeId>(i + 1 + static_cast<NodeId>(k - row_start)));
    }
    return Dag(default_names(vars), edges);
}

/// One coefficient per edge (visited in edge order) then one error
/// variance per node, both uniform over the configured ranges.
inline SemModel draw_params(const Dag& dag, Rng& rng, const ParamRanges& ranges = {}) {
    const int v = dag.num_nodes();
    SemModel m{dag, Eigen::MatrixXd::Zero(v, v), Eigen::VectorXd::Zero(v)};
    for (const Edge& e : dag.graph().edges()) {
        auto [from, to] = e.at_b == Mark::Arrow ? std::pair{e.a, e.b} : std::pair{e.b, e.a};
        double c = rng.uniform(ranges.coef_lo, ranges.coef_hi);
        if (ranges.random_signs && rng.uniform() < 0.5)
            c = -c;
        m.coef(from, to) = c;
    }
    for (int j = 0; j < v; ++j)
        m.error_variance(j) = rng.uniform(ranges.variance_lo, ranges.variance_hi);
    return m;
}

/// i.i.d. samples drawn row by row, nodes visited in topological order.
inline DataSet simulate_recursive(const SemModel& model, int n, Rng& rng) {
    if (n < 1)
        throw std::invalid_argument("sample size must be positive");
    const int v = model.dag.num_nodes();
    const auto& order = model.dag.order();
    Eigen::VectorXd sd = model.error_variance.array().sqrt();
    DataSet data{model.dag.names(), Eigen::MatrixXd(n, v)};
    for (int i = 0; i < n; ++i) {
        for (NodeId j : order) {
            double x = 0.0;
            for (NodeId p : model.dag.parents(j))
                x += model.coef(p, j) * data.values(i, p);
            data.values(i, j) = x + sd(j) * rng.normal();
        }
    }
    return data;
}

/// Column k of the result is column perm[k] of `data`.
inline DataSet permute_columns(const DataSet& data, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != data.num_vars())
        throw std::invalid_argument("permutation size does not match column count");
    DataSet out{std::vector<std::string>(perm.size()), Eigen::MatrixXd(data.values.rows(), data.values.cols())};
    for (std::size_t k = 0; k < perm.size(); ++k) {
        out.names[k] = data.names.at(static_cast<std::size_t>(perm[k]));
        out.values.col(static_cast<Eigen::Index>(k)) = data.values.col(perm[k]);
    }
    return out;
}

struct ShuffledData {
    DataSet data;
    std::vector<int> permutation;  // new column k holds old column permutation[k]
};

inline ShuffledData shuffle_columns(const DataSet& data, Rng& rng) {
    const int v = data.num_vars();
    std::vector<int> perm(static_cast<std::size_t>(v));
    for (int i = 0; i < v; ++i)
        perm[static_cast<std::size_t>(i)] = i;
    for (int i = v - 1; i > 0; --i) {
        auto j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return {permute_columns(data, perm), perm};
}

inline std::vector<int> inverse_permutation(const std::vector<int>& perm) {
    std::vector<int> inv(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k)
        inv.at(static_cast<std::size_t>(perm[k])) = static_cast<int>(k);
    return inv;
}

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_SIMULATE_HPP
