#ifndef COVBAL_MATCHBAL_H_
#define COVBAL_MATCHBAL_H_

// Second stage of kappa-matching-balance: with the number of controls to take
// from each level-intersection cell fixed, give every treatment sample kappa
// distinct controls at minimum total distance.

#include <cstdint>
#include <string>
#include <vector>

#include "covbal/balance.h"

namespace covbal::matchbal {

// Distances are nonnegative integers. Real-valued metrics are scaled to
// fixed point before they get here (the CLI uses x1000, half up).
struct DistanceMatrix {
  std::vector<std::string> treatment_ids;  // rows
  std::vector<std::string> control_ids;    // columns
  std::vector<int64_t> values;             // row-major

  int64_t at(std::size_t row, std::size_t col) const {
    return values[row * control_ids.size() + col];
  }
};

struct Assignment {
  // controls[j] belongs to dataset.treatment[j], sorted by id.
  std::vector<std::vector<std::string>> controls;
  int64_t total_cost = 0;
};

// Builds the cell-source / control / treatment network and solves it by
// min-cost flow. Throws Error(kInfeasibleSizes) when the cell sizes do not
// sum to kappa*n or exceed a cell's population, and Error(kInvalidArgument)
// when the distance matrix does not cover the dataset or holds negatives.
Assignment AssignControls(const Dataset& dataset, const Selection& cell_sizes,
                          int64_t kappa, const DistanceMatrix& distances);

}  // namespace covbal::matchbal

#endif  // COVBAL_MATCHBAL_H_
