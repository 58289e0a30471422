#ifndef CAUSAL_BENCH_INDTEST_HPP
#define CAUSAL_BENCH_INDTEST_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "graph.hpp"
#include "simulate.hpp"

namespace causal_bench {

/// Raised when a conditioning or parent set makes the regression degenerate.
class CollinearityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pearson correlation matrix plus the sample count it came from.
class CorrMatrix {
public:
    CorrMatrix() = default;

    CorrMatrix(Eigen::MatrixXd r, int n, std::vector<std::string> names)
        : m_r(std::move(r)), m_n(n), m_names(std::move(names)) {
        if (m_r.rows() != m_r.cols() || m_r.rows() != static_cast<Eigen::Index>(m_names.size()))
            throw std::invalid_argument("correlation matrix shape does not match names");
        for (Eigen::Index i = 0; i < m_r.rows(); ++i) {
            m_r(i, i) = 1.0;
            for (Eigen::Index j = 0; j < i; ++j) {
                double avg = std::clamp(0.5 * (m_r(i, j) + m_r(j, i)), -1.0, 1.0);
                m_r(i, j) = m_r(j, i) = avg;
            }
        }
    }

    const Eigen::MatrixXd& matrix() const { return m_r; }
    double operator()(NodeId i, NodeId j) const { return m_r(i, j); }
    int sample_size() const { return m_n; }
    int num_vars() const { return static_cast<int>(m_r.rows()); }
    const std::vector<std::string>& names() const { return m_names; }

private:
    Eigen::MatrixXd m_r;
    int m_n = 0;
    std::vector<std::string> m_names;
};

inline CorrMatrix correlation_matrix(const DataSet& data) {
    data.validate();
    const Eigen::Index n = data.values.rows();
    if (n < 2)
        throw std::invalid_argument("correlation needs at least two samples");
    Eigen::MatrixXd centered = data.values.rowwise() - data.values.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::VectorXd sd = cov.diagonal().array().sqrt();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
        if (!(sd(j) > 0.0))
            throw std::invalid_argument("column " + data.names[static_cast<std::size_t>(j)] +
                                        " has zero variance");
    Eigen::MatrixXd r = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    return CorrMatrix(std::move(r), static_cast<int>(n), data.names);
}

namespace detail {

inline Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, std::span<const NodeId> rows, std::span<const NodeId> cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    return out;
}

/// Solves R_ss X = rhs by Cholesky; falls back to the pseudo-inverse when
/// the system's reciprocal condition estimate drops below 1e-12.
inline Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-12)
        return llt.solve(rhs);
    return a.completeOrthogonalDecomposition().pseudoInverse() * rhs;
}

}  // namespace detail

/// Covariance of `targets` conditional on `given`, as the Schur complement
/// R_tt - R_ts R_ss^{-1} R_st of the correlation matrix.
inline Eigen::MatrixXd conditional_covariance(const CorrMatrix& c, std::span<const NodeId> targets,
                                              std::span<const NodeId> given) {
    Eigen::MatrixXd tt = detail::submatrix(c.matrix(), targets, targets);
    if (given.empty())
        return tt;
    Eigen::MatrixXd ss = detail::submatrix(c.matrix(), given, given);
    Eigen::MatrixXd st = detail::submatrix(c.matrix(), given, targets);
    return tt - st.transpose() * detail::solve_spd(ss, st);
}

inline void check_query(const CorrMatrix& c, NodeId x, NodeId y, std::span<const NodeId> s) {
    const int v = c.num_vars();
    if (x < 0 || x >= v || y < 0 || y >= v)
        throw std::out_of_range("unknown variable index");
    if (x == y)
        throw std::invalid_argument("test needs two distinct variables");
    for (NodeId z : s) {
        if (z < 0 || z >= v)
            throw std::out_of_range("unknown variable index in conditioning set");
        if (z == x || z == y)
            throw std::invalid_argument("conditioning set contains a tested variable");
    }
}

/// Partial correlation of x and y given s. Equal to -theta_xy / sqrt(theta_xx
/// theta_yy) for theta the inverse of the correlation submatrix over {x, y} u s.
inline double partial_correlation(const CorrMatrix& c, NodeId x, NodeId y, std::span<const NodeId> s) {
    check_query(c, x, y, s);
    if (s.empty())
        return c(x, y);
    // Canonical operand order keeps the result bit-identical under swaps.
    const NodeId xy[2] = {std::min(x, y), std::max(x, y)};
    std::vector<NodeId> given(s.begin(), s.end());
    std::sort(given.begin(), given.end());
    Eigen::MatrixXd cc = conditional_covariance(c, xy, given);
    constexpr double tiny = 1e-12;
    if (!(cc(0, 0) > tiny) || !(cc(1, 1) > tiny))
        throw CollinearityError("collinear conditioning set for " + c.names()[static_cast<std::size_t>(x)] +
                                ", " + c.names()[static_cast<std::size_t>(y)]);
    return std::clamp(cc(0, 1) / std::sqrt(cc(0, 0) * cc(1, 1)), -1.0, 1.0);
}

inline double partial_correlation(const CorrMatrix& c, NodeId x, NodeId y, std::initializer_list<NodeId> s) {
    return partial_correlation(c, x, y, std::span<const NodeId>(s.begin(), s.size()));
}

/// Residual variance of standardized `node` regressed on `parents`.
inline double residual_variance(const CorrMatrix& c, NodeId node, std::span<const NodeId> parents) {
    if (parents.empty())
        return 1.0;
    const NodeId target[1] = {node};
    double var = conditional_covariance(c, target, parents)(0, 0);
    if (!(var > 1e-12))
        throw CollinearityError("collinear parents for " + c.names()[static_cast<std::size_t>(node)]);
    return var;
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct IndResult {
    bool independent;
    double p_value;
    double statistic;
};

/// Fisher Z test of x _||_ y | s. z = sqrt(n - |s| - 3) atanh(r),
/// p = 2 (1 - Phi(|z|)), independent iff p > alpha.
inline IndResult fisher_z_test(const CorrMatrix& c, NodeId x, NodeId y, std::span<const NodeId> s, double alpha) {
    check_query(c, x, y, s);
    const double dof = static_cast<double>(c.sample_size()) - static_cast<double>(s.size()) - 3.0;
    if (dof < 1.0)
        throw std::invalid_argument("Fisher Z needs n - |s| - 3 >= 1, got n = " + std::to_string(c.sample_size()) +
                                    ", |s| = " + std::to_string(s.size()));
    double r = partial_correlation(c, x, y, s);
    if (std::abs(r) >= 1.0)
        return {false, 0.0, std::copysign(INFINITY, r)};
    double z = std::sqrt(dof) * std::atanh(r);
    double p = std::erfc(std::abs(z) / std::numbers::sqrt2);
    return {p > alpha, p, z};
}

inline IndResult fisher_z_test(const CorrMatrix& c, NodeId x, NodeId y, std::initializer_list<NodeId> s, double alpha) {
    return fisher_z_test(c, x, y, std::span<const NodeId>(s.begin(), s.size()), alpha);
}

/// Conditional-independence test interface used by the PC family.
template <class T>
concept IndependenceTest = requires(const T& t, NodeId x, std::span<const NodeId> s) {
    { t.test(x, x, s) } -> std::same_as<IndResult>;
    { t.names() } -> std::convertible_to<const std::vector<std::string>&>;
};

class FisherZTest {
public:
    FisherZTest(std::shared_ptr<const CorrMatrix> corr, double alpha) : m_corr(std::move(corr)), m_alpha(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    FisherZTest(CorrMatrix corr, double alpha) : FisherZTest(std::make_shared<const CorrMatrix>(std::move(corr)), alpha) {}

    IndResult test(NodeId x, NodeId y, std::span<const NodeId> s) const {
        return fisher_z_test(*m_corr, x, y, s, m_alpha);
    }
    const std::vector<std::string>& names() const { return m_corr->names(); }
    double alpha() const { return m_alpha; }
    const CorrMatrix& corr() const { return *m_corr; }

private:
    std::shared_ptr<const CorrMatrix> m_corr;
    double m_alpha;
};

/// d-separation in a known DAG presented as a test: p = 1 when separated, 0 otherwise.
class DsepTest {
public:
    explicit DsepTest(Dag dag) : m_dag(std::move(dag)) {}

    IndResult test(NodeId x, NodeId y, std::span<const NodeId> s) const {
        bool sep = d_separated(m_dag, x, y, s);
        return {sep, sep ? 1.0 : 0.0, sep ? 0.0 : 1.0};
    }
    const std::vector<std::string>& names() const { return m_dag.names(); }
    const Dag& dag() const { return m_dag; }

private:
    Dag m_dag;
};

}  // namespace causal_bench

#endif  // CAUSAL_BENCH_INDTEST_HPP
