#include "fincon/assignment.hpp"

#include <cmath>
#include <limits>

#include "fincon/errors.hpp"

namespace fincon {

namespace {

// Kuhn-Munkres with potentials, minimizing; O(n^3).  cost is n x n.
double solve_min_cost(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) total += cost[p[j] - 1][j - 1];
    return total;
}

// Best achievable total over the score submatrix given by rows/cols.
double best_total_sub(const Eigen::MatrixXd& score, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
    const int m = static_cast<int>(rows.size());
    if (m == 0) return 0.0;
    std::vector<std::vector<double>> cost(m, std::vector<double>(m));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) cost[a][b] = -score(rows[a], cols[b]);
    return -solve_min_cost(cost);
}

}  // namespace

double assignment_best_total(const Eigen::MatrixXd& score) {
    if (score.rows() != score.cols() || score.rows() == 0)
        throw Precondition("assignment: score matrix must be square and nonempty");
    std::vector<int> all(score.rows());
    for (int i = 0; i < score.rows(); ++i) all[i] = i;
    return best_total_sub(score, all, all);
}

Assignment solve_assignment(const Eigen::MatrixXd& score) {
    const int n = static_cast<int>(score.rows());
    if (score.rows() != score.cols() || n == 0)
        throw Precondition("assignment: score matrix must be square and nonempty");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::isnan(score(i, j)))
                throw Precondition("assignment: score matrix contains NaN");

    const double optimum = assignment_best_total(score);
    // Scale-aware slack for "still optimal" checks; entries are usually
    // correlations in [0, 1] so this sits far below any real gap.
    double scale = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(score(i, j)));
    const double eps = 1e-9 * scale * n;

    Assignment out;
    out.col_of_row.resize(n, -1);
    std::vector<char> taken(n, false);
    double prefix = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<int> rest_rows;
        for (int r = i + 1; r < n; ++r) rest_rows.push_back(r);
        bool placed = false;
        for (int j = 0; j < n && !placed; ++j) {
            if (taken[j]) continue;
            std::vector<int> rest_cols;
            for (int c = 0; c < n; ++c)
                if (!taken[c] && c != j) rest_cols.push_back(c);
            const double completion =
                prefix + score(i, j) + best_total_sub(score, rest_rows, rest_cols);
            if (completion >= optimum - eps) {
                out.col_of_row[i] = j;
                taken[j] = true;
                prefix += score(i, j);
                placed = true;
            }
        }
        if (!placed)
            throw ComputeError("assignment: failed to extend optimal prefix");
    }
    out.total = prefix;
    return out;
}

}  // namespace fincon
