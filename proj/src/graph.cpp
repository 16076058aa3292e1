#include "fincon/graph.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include "fincon/errors.hpp"

namespace fincon {

namespace {

void check_square(const Eigen::MatrixXd& c) {
    if (c.rows() != c.cols() || c.rows() == 0)
        throw Precondition("graph: matrix must be square and nonempty");
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw AsymmetricInput("graph: matrix is not symmetric");
}

Eigen::MatrixXd edge_weights(const Eigen::MatrixXd& c, bool abs_weights) {
    Eigen::MatrixXd w = abs_weights ? c.cwiseAbs().eval() : c.cwiseMax(0.0).eval();
    w.diagonal().setZero();
    return w;
}

}  // namespace

double global_efficiency(const Eigen::MatrixXd& c, bool abs_weights) {
    check_square(c);
    const auto n = c.rows();
    if (n < 2) return 0.0;
    const Eigen::MatrixXd w = edge_weights(c, abs_weights);
    const double inf = std::numeric_limits<double>::infinity();

    double acc = 0.0;
    // Dijkstra from every source over edge lengths 1/weight.
    for (Eigen::Index src = 0; src < n; ++src) {
        std::vector<double> dist(n, inf);
        std::vector<char> done(n, false);
        dist[src] = 0.0;
        using Item = std::pair<double, Eigen::Index>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0.0, src});
        while (!pq.empty()) {
            const auto [d, u] = pq.top();
            pq.pop();
            if (done[u]) continue;
            done[u] = true;
            for (Eigen::Index v = 0; v < n; ++v) {
                if (w(u, v) <= 0.0) continue;
                const double nd = d + 1.0 / w(u, v);
                if (nd < dist[v]) {
                    dist[v] = nd;
                    pq.push({nd, v});
                }
            }
        }
        for (Eigen::Index dst = 0; dst < n; ++dst)
            if (dst != src && dist[dst] < inf) acc += 1.0 / dist[dst];
    }
    return acc / static_cast<double>(n * (n - 1));
}

double modularity(const Eigen::MatrixXd& c, const std::vector<int>& partition,
                  bool abs_weights) {
    check_square(c);
    const auto n = c.rows();
    if (static_cast<Eigen::Index>(partition.size()) != n)
        throw DimensionMismatch("modularity: partition size differs from node count");
    const Eigen::MatrixXd w = edge_weights(c, abs_weights);
    const double two_m = w.sum();  // counts each undirected edge twice
    if (two_m <= 0.0)
        throw NoPositiveEdges("modularity: graph has no positive edge");

    const Eigen::VectorXd degree = w.rowwise().sum();
    double q = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (partition[i] == partition[j])
                q += w(i, j) - degree(i) * degree(j) / two_m;
    return q / two_m;
}

std::vector<int> detect_communities(const Eigen::MatrixXd& c, bool abs_weights) {
    check_square(c);
    const auto n = c.rows();
    const Eigen::MatrixXd w = edge_weights(c, abs_weights);
    const double two_m = w.sum();
    if (two_m <= 0.0)
        throw NoPositiveEdges("detect_communities: graph has no positive edge");

    // e(a, b): fraction of edge weight between communities a and b;
    // deg(a): fraction of degree in a.  Merging a and b changes Q by
    // 2 * (e(a,b) - deg(a) * deg(b)).
    std::vector<std::vector<int>> members(n);
    std::vector<double> deg(n);
    Eigen::MatrixXd e = w / two_m;
    std::vector<int> alive(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        members[i] = {static_cast<int>(i)};
        deg[i] = w.row(i).sum() / two_m;
        alive[i] = static_cast<int>(i);
    }

    while (alive.size() > 1) {
        double best_gain = 0.0;
        int best_a = -1, best_b = -1;
        for (std::size_t a = 0; a < alive.size(); ++a) {
            for (std::size_t b = a + 1; b < alive.size(); ++b) {
                const int ia = alive[a], ib = alive[b];
                const double gain = 2.0 * (e(ia, ib) - deg[ia] * deg[ib]);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_a = static_cast<int>(a);
                    best_b = static_cast<int>(b);
                }
            }
        }
        if (best_a < 0) break;  // no merge improves Q
        const int ia = alive[best_a], ib = alive[best_b];
        for (int slot : alive) {
            if (slot == ia || slot == ib) continue;
            e(ia, slot) += e(ib, slot);
            e(slot, ia) = e(ia, slot);
        }
        e(ia, ia) += e(ib, ib) + 2.0 * e(ia, ib);
        deg[ia] += deg[ib];
        members[ia].insert(members[ia].end(), members[ib].begin(), members[ib].end());
        alive.erase(alive.begin() + best_b);
    }

    // Dense ids in order of each community's lowest member.
    std::map<int, std::vector<int>> by_lowest;
    for (int slot : alive) {
        int lowest = members[slot][0];
        for (int m : members[slot]) lowest = std::min(lowest, m);
        by_lowest[lowest] = members[slot];
    }
    std::vector<int> out(n, -1);
    int next_id = 0;
    for (const auto& [lowest, ms] : by_lowest) {
        for (int m : ms) out[m] = next_id;
        ++next_id;
    }
    return out;
}

}  // namespace fincon
