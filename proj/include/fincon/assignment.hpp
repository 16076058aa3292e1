#pragma once

#include <Eigen/Dense>
#include <vector>

namespace fincon {

// Maximum-total-score assignment on a square score matrix.  Among all
// optimal assignments the lexicographically smallest one (row 0 takes the
// lowest column index it can afford, then row 1, ...) is returned, so ties
// resolve the same way everywhere.
struct Assignment {
    std::vector<int> col_of_row;
    double total = 0.0;
};

Assignment solve_assignment(const Eigen::MatrixXd& score);

// Optimal total alone (O(n^3) shortest augmenting paths), no tie policy.
double assignment_best_total(const Eigen::MatrixXd& score);

}  // namespace fincon
