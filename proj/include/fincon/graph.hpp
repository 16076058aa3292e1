#pragma once

#include <Eigen/Dense>
#include <vector>

namespace fincon {

// Graph statistics on a correlation matrix.  By default only strictly
// positive off-diagonal entries count as edges; abs_weights = true uses
// |entry| instead.  The diagonal is always ignored.

// Mean inverse shortest-path length over ordered node pairs, with edge
// length 1/weight.  Disconnected pairs contribute zero, so a graph with no
// positive edge scores 0 and the complete unit-weight graph scores 1.
double global_efficiency(const Eigen::MatrixXd& c, bool abs_weights = false);

// Newman weighted modularity of a node partition (community id per node).
// Throws NoPositiveEdges when the edge set is empty.
double modularity(const Eigen::MatrixXd& c, const std::vector<int>& partition,
                  bool abs_weights = false);

// Greedy agglomerative modularity maximization: start from singletons,
// repeatedly apply the merge with the best modularity gain (lowest index
// pair on ties), stop when no merge helps.  Returned ids are dense and
// numbered by each community's lowest member.
std::vector<int> detect_communities(const Eigen::MatrixXd& c, bool abs_weights = false);

}  // namespace fincon
