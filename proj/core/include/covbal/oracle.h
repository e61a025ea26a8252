#ifndef COVBAL_ORACLE_H_
#define COVBAL_ORACLE_H_

// Exhaustive min-imbalance solver for any number of covariates, plus instance
// generators (uniform random datasets and the 3-dimensional-matching
// embedding with P = 3).

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "covbal/balance.h"

namespace covbal::oracle {

inline constexpr int kMaxCells = 12;
inline constexpr int64_t kMaxControls = 16;

struct OracleResult {
  int64_t objective = 0;
  Selection argmin;  // first optimum in lexicographic enumeration order
  int64_t optimal_count = 0;  // number of optimal cell-count vectors
};

// Enumerates every cell-count vector 0 <= s <= u with sum q. Throws
// Error(kTooLarge) past kMaxCells nonempty cells or kMaxControls controls and
// Error(kQTooLarge) when q > n'.
OracleResult ExactMinImbalance(const Dataset& dataset, int64_t q);
OracleResult ExactMinImbalance(const LevelIndex& index,
                               const IntersectionCounts& counts, int64_t q);

using Triple = std::array<int, 3>;  // coordinates in 1..x_size

struct ThreeDMInstance {
  int x_size = 0;
  std::vector<Triple> triples;
  std::optional<std::vector<Triple>> planted;

  // Throws Error(kInvalidArgument) on out-of-range coordinates, duplicate
  // triples, or a planted set that is not a perfect matching inside U.
  void Validate() const;
};

// Treatment sample j has labels (j, j, j); control sample c<k> carries the
// k-th triple. Every level then has exactly one treatment sample, and a
// zero-imbalance selection of size |X| is exactly a perfect matching.
Dataset Gen3dmDataset(const ThreeDMInstance& instance);

// |X| = x_size with a planted matching (i, pi2(i), pi3(i)) plus distinct
// random triples up to triple_count, shuffled.
ThreeDMInstance RandomPlanted3dm(int x_size, int triple_count, uint64_t seed);

// Brute force over subsets of U.
bool HasPerfectMatching(const ThreeDMInstance& instance);

// P covariates, n treatment and n_control control samples, labels drawn
// uniformly from levels[p] values ("v1", "v2", ...) per covariate.
Dataset RandomInstance(int covariate_count, int64_t n, int64_t n_control,
                       const std::vector<int>& levels, uint64_t seed);

}  // namespace covbal::oracle

#endif  // COVBAL_ORACLE_H_
