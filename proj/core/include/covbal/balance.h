#ifndef COVBAL_BALANCE_H_
#define COVBAL_BALANCE_H_

// Problem data model for min-imbalance control selection: samples with P
// nominal covariates, per-covariate level counts, control counts per
// level-intersection cell, and the imbalance objective.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace covbal {

struct Sample {
  std::string id;
  std::vector<std::string> labels;  // one per covariate
};

struct Dataset {
  int covariate_count = 0;
  std::vector<std::string> covariate_names;  // optional; size 0 or P
  std::vector<Sample> treatment;
  std::vector<Sample> control;

  int64_t n() const { return static_cast<int64_t>(treatment.size()); }
  int64_t n_control() const { return static_cast<int64_t>(control.size()); }

  // Every sample has P labels and ids are unique within each group.
  // Throws Error(kInvalidArgument / kDuplicateId).
  void Validate() const;
};

// A level-intersection cell: one level index per covariate.
using Cell = std::vector<int32_t>;

// Per covariate, the sorted union of labels seen in either group, with
// treatment counts (ell) and control counts (ell_control) per level.
class LevelIndex {
 public:
  int covariate_count() const { return static_cast<int>(labels_.size()); }
  int level_count(int p) const { return static_cast<int>(labels_[p].size()); }
  const std::string& label(int p, int i) const { return labels_[p][i]; }
  int64_t ell(int p, int i) const { return ell_[p][i]; }
  int64_t ell_control(int p, int i) const { return ell_control_[p][i]; }
  const std::vector<int64_t>& ell(int p) const { return ell_[p]; }
  const std::vector<int64_t>& ell_control(int p) const {
    return ell_control_[p];
  }
  int64_t n() const { return n_; }
  int64_t n_control() const { return n_control_; }

  // -1 when the label never occurs for covariate p.
  int LevelOf(int p, std::string_view label) const;
  // Throws Error(kInvalidArgument) on an unseen label.
  Cell CellOf(const Sample& sample) const;

 private:
  friend LevelIndex IndexLevels(const Dataset& dataset);

  std::vector<std::vector<std::string>> labels_;
  std::vector<std::vector<int64_t>> ell_;
  std::vector<std::vector<int64_t>> ell_control_;
  int64_t n_ = 0;
  int64_t n_control_ = 0;
};

// Control population per nonempty cell, ordered lexicographically.
struct IntersectionCounts {
  std::map<Cell, int64_t> cells;

  int64_t Count(const Cell& cell) const;
  int64_t Total() const;
};

// Selected count per cell. Zero entries may be present or omitted.
struct Selection {
  std::map<Cell, int64_t> counts;

  int64_t Total() const;
  int64_t Count(const Cell& cell) const;
};

struct ImbalanceReport {
  // Indexed [covariate][level].
  std::vector<std::vector<int64_t>> selected;
  std::vector<std::vector<int64_t>> discrepancy;
  std::vector<std::vector<int64_t>> excess;
  std::vector<std::vector<int64_t>> deficit;
  int64_t total = 0;
};

// Throws Error(kEmptyTreatment) when the treatment group is empty.
LevelIndex IndexLevels(const Dataset& dataset);

IntersectionCounts CountIntersections(const Dataset& dataset,
                                      const LevelIndex& index);

// Throws Error(kCellOverflow) if some cell selects more than its population,
// and Error(kInvalidArgument) for negative counts or malformed cells.
ImbalanceReport Imbalance(const LevelIndex& index,
                          const IntersectionCounts& population,
                          const Selection& selection);

// Imbalance against the level targets without population checks.
ImbalanceReport Imbalance(const LevelIndex& index, const Selection& selection);

// Counts the cells of an explicit list of control ids.
// Throws Error(kUnknownId) for ids outside the control group and
// Error(kDuplicateId) for repeated ids.
Selection SelectionFromIds(const Dataset& dataset, const LevelIndex& index,
                           const std::vector<std::string>& ids);

// Picks exactly counts[cell] control ids from each cell, uniformly at random
// given the seed. Ids are returned sorted.
std::vector<std::string> Materialize(const Dataset& dataset,
                                     const LevelIndex& index,
                                     const Selection& selection,
                                     uint64_t seed);

// Replaces each treatment sample with kappa copies ("<id>#<copy>" for
// kappa > 1). Throws Error(kKappaOutOfRange) unless 1 <= kappa <= n'/n.
Dataset KappaExpand(const Dataset& dataset, int64_t kappa);

}  // namespace covbal

#endif  // COVBAL_BALANCE_H_
