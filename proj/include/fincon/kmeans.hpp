#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace fincon {

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;  // k x dim
    double inertia = 0.0;
    int best_restart = 0;
};

// Lloyd iterations with k-means++ seeding.  `restarts` independent runs use
// seeds seed, seed+1, ...; the lowest inertia wins, lowest restart index on
// a tie.  A cluster that empties is re-seeded with the point farthest from
// its centroid.  Throws KTooLarge when k exceeds the number of points.
KMeansResult kmeans(const std::vector<Eigen::VectorXd>& points, int k,
                    std::uint64_t seed, int restarts = 8, int max_iter = 100);

}  // namespace fincon
