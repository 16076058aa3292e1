#include "fincon/kmeans.hpp"

#include <cmath>
#include <limits>

#include "fincon/errors.hpp"
#include "fincon/rng.hpp"

namespace fincon {

namespace {

double sq_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).squaredNorm();
}

KMeansResult run_once(const std::vector<Eigen::VectorXd>& pts, int k,
                      std::uint64_t seed, int max_iter) {
    const int n = static_cast<int>(pts.size());
    const auto dim = pts[0].size();
    Rng rng(seed);

    // k-means++ seeding: first centroid uniform, the rest proportional to
    // the squared distance to the nearest centroid chosen so far.
    Eigen::MatrixXd c(k, dim);
    c.row(0) = pts[rng.index(n)].transpose();
    std::vector<double> d2(n);
    for (int j = 1; j < k; ++j) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int m = 0; m < j; ++m)
                best = std::min(best, sq_dist(pts[i], c.row(m).transpose()));
            d2[i] = best;
            total += best;
        }
        int pick;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.index(n));  // all points coincide
        } else {
            double r = rng.uniform() * total;
            pick = n - 1;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += d2[i];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
        }
        c.row(j) = pts[pick].transpose();
    }

    std::vector<int> labels(n, -1);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        // Assignment step: each point picks its nearest centroid (lowest
        // index on ties).  Slots are disjoint so this can run in parallel.
#pragma omp parallel for schedule(static) reduction(|| : changed)
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(pts[i], c.row(0).transpose());
            for (int m = 1; m < k; ++m) {
                const double d = sq_dist(pts[i], c.row(m).transpose());
                if (d < best_d) {
                    best_d = d;
                    best = m;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed && it > 0) break;

        // Update step, accumulated serially in point order.
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
        std::vector<long> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(labels[i]) += pts[i].transpose();
            ++counts[labels[i]];
        }
        for (int m = 0; m < k; ++m) {
            if (counts[m] > 0) {
                c.row(m) = sums.row(m) / static_cast<double>(counts[m]);
            } else {
                // Re-seed an empty cluster with the point farthest from its
                // current centroid.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d = sq_dist(pts[i], c.row(labels[i]).transpose());
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                c.row(m) = pts[far].transpose();
            }
        }
    }

    KMeansResult res;
    res.labels = labels;
    res.centroids = c;
    res.inertia = 0.0;
    for (int i = 0; i < n; ++i) res.inertia += sq_dist(pts[i], c.row(labels[i]).transpose());
    return res;
}

}  // namespace

KMeansResult kmeans(const std::vector<Eigen::VectorXd>& points, int k,
                    std::uint64_t seed, int restarts, int max_iter) {
    const int n = static_cast<int>(points.size());
    if (n == 0) throw EmptyInput("kmeans: no points");
    if (k < 1) throw Precondition("kmeans: k must be >= 1");
    if (k > n)
        throw KTooLarge("kmeans: k=" + std::to_string(k) + " exceeds " +
                        std::to_string(n) + " points");
    if (restarts < 1) throw Precondition("kmeans: need at least one restart");
    for (const auto& p : points)
        if (p.size() != points[0].size())
            throw DimensionMismatch("kmeans: points disagree on dimension");

    std::vector<KMeansResult> runs(restarts);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < restarts; ++r)
        runs[r] = run_once(points, k, seed + static_cast<std::uint64_t>(r), max_iter);

    int best = 0;
    for (int r = 1; r < restarts; ++r)
        if (runs[r].inertia < runs[best].inertia) best = r;
    runs[best].best_restart = best;
    return runs[best];
}

}  // namespace fincon
