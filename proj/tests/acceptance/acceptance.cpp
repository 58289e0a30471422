// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "causal_bench/harness.hpp"
#include "oracles.hpp"

using namespace causal_bench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int g_failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
    auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s (%.2f s) %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass)
        ++g_failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::vector<Dag> oracle_dags() {
    Rng rng(derive_seed(kDefaultMasterSeed, {1}));
    std::vector<Dag> out;
    for (int i = 0; i < 50; ++i)
        out.push_back(random_dag(10, 2, rng));
    return out;
}

/// Independence facts for the four-node conflict scenario: x=0, y=1, z=2, w=3.
class ConflictFacts {
public:
    IndResult test(NodeId a, NodeId b, std::span<const NodeId> s) const {
        NodeId lo = std::min(a, b), hi = std::max(a, b);
        bool ind = s.empty() && ((lo == 0 && hi == 2) || (lo == 1 && hi == 3) || (lo == 0 && hi == 3));
        return {ind, ind ? 1.0 : 0.0, 0.0};
    }
    const std::vector<std::string>& names() const { return m_names; }

private:
    std::vector<std::string> m_names = default_names(4);
};

/// Random marked graph on 4 nodes with at most 4 edges.
MixedGraph random_estimate(Rng& rng) {
    MixedGraph g(4);
    std::size_t limit = rng.uniform_index(5);
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            pairs.emplace_back(a, b);
    for (std::size_t i = pairs.size(); i > 1; --i)
        std::swap(pairs[i - 1], pairs[rng.uniform_index(i)]);
    for (std::size_t k = 0; k < limit; ++k) {
        auto [a, b] = pairs[k];
        switch (rng.uniform_index(4)) {
        case 0: g.add_directed(a, b); break;
        case 1: g.add_directed(b, a); break;
        case 2: g.add_undirected(a, b); break;
        default: g.add_bidirected(a, b); break;
        }
    }
    return g;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Table text with the last (E) column removed from every line.
std::string mask_elapsed(const std::string& text) {
    std::istringstream in(text);
    std::string out;
    for (std::string line; std::getline(in, line);)
        out += line.substr(0, line.rfind('\t')) + "\n";
    return out;
}

}  // namespace

int main() {
    const std::vector<Dag> dags = oracle_dags();

    criterion("oracle-cpdag-recovery", [&] {
        auto start = std::chrono::steady_clock::now();
        int ok = 0;
        for (const Dag& d : dags)
            ok += run_pc(PcVariant::pc(0.01), DsepTest(d)) == cpdag_of(d);
        double t = seconds_since(start);
        return Outcome{ok == 50 && t < 5.0,
                       std::to_string(ok) + "/50 exact CPDAGs, 10 nodes, degree 2;" + fmt(" %.3f s", t)};
    });

    criterion("fges-equals-pc-under-oracle", [&] {
        auto start = std::chrono::steady_clock::now();
        int ok = 0;
        for (const Dag& d : dags) {
            DsepScore s(d);
            ok += Fges(s, FgesOptions{false, 1}).search() == run_pc(PcVariant::pc(0.01), DsepTest(d));
        }
        double t = seconds_since(start);
        return Outcome{ok == 50 && t < 10.0,
                       std::to_string(ok) + "/50 identical graphs, faithfulness=false;" + fmt(" %.3f s", t)};
    });

    criterion("reference-accuracy-50-2-1000", [&] {
        const std::uint64_t master = derive_seed(kDefaultMasterSeed, {14});
        const Cell cell{50, 2, 1000};
        double pc_ap = 0, pc_ar = 0, f_ap = 0, f_ar = 0, f_ahp = 0;
        auto start = std::chrono::steady_clock::now();
        for (int run = 0; run < 10; ++run) {
            auto sim = simulate_dataset(cell, run, master);
            auto pc = graph_stats(sim.truth, run_algorithm(parse_algorithm_spec("pc:alpha=0.01"), sim.data));
            auto fg = graph_stats(sim.truth,
                                  run_algorithm(parse_algorithm_spec("fges:penalty=2,faithfulness=false"), sim.data));
            pc_ap += pc.ap.value_or(0) / 10;
            pc_ar += pc.ar.value_or(0) / 10;
            f_ap += fg.ap.value_or(0) / 10;
            f_ar += fg.ar.value_or(0) / 10;
            f_ahp += fg.ahp.value_or(0) / 10;
        }
        double t = seconds_since(start);
        bool pass = std::abs(pc_ap - 0.96) <= 0.05 && std::abs(pc_ar - 0.97) <= 0.05 && std::abs(f_ap - 0.97) <= 0.05 &&
                    std::abs(f_ar - 0.99) <= 0.05 && std::abs(f_ahp - 0.92) <= 0.07 && t < 120;
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "PC AP %.3f (0.96) AR %.3f (0.97); FGES AP %.3f (0.97) AR %.3f (0.99) AHP %.3f (0.92)", pc_ap,
                      pc_ar, f_ap, f_ar, f_ahp);
        return Outcome{pass, buf};
    });

    criterion("identical-adjacency-statistics", [&] {
        const std::uint64_t master = derive_seed(kDefaultMasterSeed, {4});
        int agree = 0, total = 0;
        for (int run = 0; run < 10; ++run) {
            auto sim = simulate_dataset({50, 4, 500}, run, master);
            FisherZTest test(correlation_matrix(sim.data), 0.01);
            for (bool stable : {false, true}) {
                PcVariant a = PcVariant::pc(0.01), b = PcVariant::cpc(0.01), c = PcVariant::pc_stable_max(0.01);
                a.stable = b.stable = c.stable = stable;
                auto ca = graph_stats(sim.truth, run_pc(a, test)).adjacency;
                auto cb = graph_stats(sim.truth, run_pc(b, test)).adjacency;
                auto cc = graph_stats(sim.truth, run_pc(c, test)).adjacency;
                ++total;
                agree += ca == cb && ca == cc;
            }
        }
        return Outcome{agree == total, std::to_string(agree) + "/" + std::to_string(total) +
                                           " dataset x stable-flag groups with equal ATP/AFP/AFN"};
    });

    criterion("order-independence", [&] {
        const std::uint64_t master = derive_seed(kDefaultMasterSeed, {20});
        int adj_ok = 0, full_ok = 0, total = 0;
        for (int run = 0; run < 10; ++run) {
            auto sim = simulate_dataset({20, 4, 500}, run, master);
            MixedGraph stable = run_pc(PcVariant::pc_stable(0.01), sim.data);
            MixedGraph smax = run_pc(PcVariant::pc_stable_max(0.01), sim.data);
            Rng rng(derive_seed(master, {static_cast<std::uint64_t>(run), 99}));
            for (int k = 0; k < 10; ++k) {
                DataSet perm = shuffle_columns(sim.data, rng).data;
                MixedGraph s2 = run_pc(PcVariant::pc_stable(0.01), perm).reindexed(stable.names());
                MixedGraph m2 = run_pc(PcVariant::pc_stable_max(0.01), perm).reindexed(smax.names());
                bool same_adj = true;
                for (NodeId a = 0; a < 20; ++a)
                    for (NodeId b = a + 1; b < 20; ++b)
                        same_adj = same_adj && stable.adjacent(a, b) == s2.adjacent(a, b);
                adj_ok += same_adj;
                full_ok += m2 == smax;
                ++total;
            }
        }
        return Outcome{adj_ok == total && full_ok == total,
                       "pc-stable adjacencies " + std::to_string(adj_ok) + "/" + std::to_string(total) +
                           ", pc-stable-max graphs " + std::to_string(full_ok) + "/" + std::to_string(total)};
    });

    criterion("conflict-rule-trace", [&] {
        MixedGraph priority(4), overwrite(4), bidirected(4);
        priority.add_directed(0, 1);
        priority.add_directed(2, 1);
        priority.add_undirected(2, 3);
        overwrite.add_directed(0, 1);
        overwrite.add_directed(1, 2);
        overwrite.add_directed(3, 2);
        bidirected.add_directed(0, 1);
        bidirected.add_bidirected(1, 2);
        bidirected.add_directed(3, 2);
        ConflictFacts facts;
        std::ostringstream got;
        bool pass = true;
        for (auto [rule, want] : {std::pair{ConflictRule::Priority, priority}, std::pair{ConflictRule::Overwrite, overwrite},
                                  std::pair{ConflictRule::Bidirected, bidirected}}) {
            PcVariant v = PcVariant::pc(0.01);
            v.conflict = rule;
            MixedGraph out = run_pc(v, facts);
            pass = pass && out == want;
            got << to_string(rule) << "=" << out << " ";
        }
        return Outcome{pass, got.str()};
    });

    criterion("metrics-oracle", [&] {
        std::vector<Dag> universe;
        for (const Dag& d : oracle::all_dags(4))
            if (d.num_edges() <= 4)
                universe.push_back(d);
        Rng rng(derive_seed(kDefaultMasterSeed, {500}));
        int ok = 0;
        bool in_range = true;
        for (int i = 0; i < 500; ++i) {
            const Dag& truth = universe[rng.uniform_index(universe.size())];
            MixedGraph est = random_estimate(rng);
            auto [adj, arr] = oracle::confusion_by_sets(truth, est);
            auto s = graph_stats(truth, est);
            ok += s.adjacency == ConfusionCounts{adj.tp, adj.fp, adj.fn, adj.tn} &&
                  s.arrowhead == ConfusionCounts{arr.tp, arr.fp, arr.fn, arr.tn};
            in_range = in_range && s.mcadj >= -1 && s.mcadj <= 1 && s.mcarrow >= -1 && s.mcarrow <= 1;
        }
        return Outcome{ok == 500 && in_range, std::to_string(ok) + "/500 pairs match enumeration over " +
                                                  std::to_string(universe.size()) + " DAGs; MCC in range: " +
                                                  (in_range ? "yes" : "no")};
    });

    criterion("simulation-moments", [&] {
        Rng rng(derive_seed(kDefaultMasterSeed, {100000}));
        const int n = 100000;
        double worst = 0;
        int entries = 0;
        for (int m = 0; m < 10; ++m) {
            SemModel model = draw_params(random_dag(10, 2, rng), rng);
            DataSet d = simulate_recursive(model, n, rng);
            Eigen::MatrixXd truth = oracle::sem_covariance_recursive(model);
            Eigen::MatrixXd centered = d.values.rowwise() - d.values.colwise().mean();
            Eigen::MatrixXd sample = centered.transpose() * centered / static_cast<double>(n - 1);
            for (int i = 0; i < 10; ++i)
                for (int j = i; j < 10; ++j) {
                    double se = std::sqrt((truth(i, i) * truth(j, j) + truth(i, j) * truth(i, j)) / n);
                    worst = std::max(worst, std::abs(sample(i, j) - truth(i, j)) / se);
                    ++entries;
                }
        }
        return Outcome{worst <= 5.0, std::to_string(entries) + " covariance entries, worst " + fmt("%.2f SE", worst)};
    });

    criterion("end-to-end-determinism", [&] {
        fs::path root = fs::temp_directory_path() / ("cb_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        std::ofstream(root / "study.txt") << "seed = 4242\nruns = 3\ncell = 20 2 500\n"
                                          << "algorithm = pc-stable:alpha=0.01\nalgorithm = fges:penalty=2\n"
                                          << "timeout = 600\nworkers = 1\n";
        const std::string cli = CAUSAL_BENCH_CLI;
        std::vector<std::string> stats, stds;
        for (const char* tag : {"a", "b"}) {
            std::string t = tag;
            std::string cmd = "cd '" + root.string() + "' && ('" + cli + "' simulate --config study.txt --out corpus_" +
                              t + " && '" + cli + "' run --corpus corpus_" + t + " --config study.txt --out results_" +
                              t + " && '" + cli + "' aggregate --records results_" + t + " --out tables_" + t +
                              ") > /dev/null";
            if (std::system(cmd.c_str()) != 0)
                return Outcome{false, "pipeline command failed"};
            stats.push_back(slurp(root / ("tables_" + t) / "stats.txt"));
            stds.push_back(slurp(root / ("tables_" + t) / "std.txt"));
        }
        bool same = !stats[0].empty() && mask_elapsed(stats[0]) == mask_elapsed(stats[1]) &&
                    mask_elapsed(stds[0]) == mask_elapsed(stds[1]);
        std::size_t rows = static_cast<std::size_t>(std::count(stats[0].begin(), stats[0].end(), '\n')) - 1;
        fs::remove_all(root);
        return Outcome{same && rows == 2, std::to_string(rows) + " rows; stats.txt and std.txt identical with E masked: " +
                                              (same ? "yes" : "no")};
    });

    criterion("fges-scaling-500-6-1000", [&] {
        auto sim = simulate_dataset({500, 6, 1000}, 0, derive_seed(kDefaultMasterSeed, {600}));
        auto start = std::chrono::steady_clock::now();
        MixedGraph g = run_algorithm(parse_algorithm_spec("fges:penalty=4,faithfulness=true"), sim.data);
        double t = seconds_since(start);
        auto s = graph_stats(sim.truth, g);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.1f s of 600 allowed; AP %.3f AR %.3f AHP %.3f", t, s.ap.value_or(0),
                      s.ar.value_or(0), s.ahp.value_or(0));
        return Outcome{t < 600.0, buf};
    });

    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
