#include "covbal/balance.h"

#include <algorithm>
#include <cstdlib>
#include <span>
#include <unordered_map>
#include <unordered_set>

#include "covbal/error.h"
#include "covbal/random.h"

namespace covbal {

namespace {

void ValidateGroup(const std::vector<Sample>& group, int p,
                   std::string_view name) {
  std::unordered_set<std::string_view> ids;
  ids.reserve(group.size());
  for (const Sample& s : group) {
    if (static_cast<int>(s.labels.size()) != p) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(name) + " sample '" + s.id + "' has " +
                      std::to_string(s.labels.size()) + " labels, expected " +
                      std::to_string(p));
    }
    if (!ids.insert(s.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate " + std::string(name) +
                                               " id '" + s.id + "'");
    }
  }
}

}  // namespace

void Dataset::Validate() const {
  if (covariate_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one covariate");
  }
  if (!covariate_names.empty() &&
      static_cast<int>(covariate_names.size()) != covariate_count) {
    throw Error(ErrorCode::kInvalidArgument,
                "covariate name count does not match covariate count");
  }
  ValidateGroup(treatment, covariate_count, "treatment");
  ValidateGroup(control, covariate_count, "control");
}

int LevelIndex::LevelOf(int p, std::string_view label) const {
  const auto& v = labels_[p];
  auto it = std::lower_bound(v.begin(), v.end(), label);
  if (it == v.end() || *it != label) return -1;
  return static_cast<int>(it - v.begin());
}

Cell LevelIndex::CellOf(const Sample& sample) const {
  Cell cell(covariate_count());
  for (int p = 0; p < covariate_count(); ++p) {
    const int level = LevelOf(p, sample.labels[p]);
    if (level < 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sample '" + sample.id + "' has unindexed label '" +
                      sample.labels[p] + "'");
    }
    cell[p] = level;
  }
  return cell;
}

LevelIndex IndexLevels(const Dataset& dataset) {
  dataset.Validate();
  if (dataset.treatment.empty()) {
    throw Error(ErrorCode::kEmptyTreatment, "treatment group is empty");
  }
  const int P = dataset.covariate_count;
  LevelIndex index;
  index.labels_.resize(P);
  index.ell_.resize(P);
  index.ell_control_.resize(P);
  index.n_ = dataset.n();
  index.n_control_ = dataset.n_control();

  for (int p = 0; p < P; ++p) {
    std::unordered_map<std::string_view, int64_t> treated;
    std::unordered_map<std::string_view, int64_t> controls;
    for (const Sample& s : dataset.treatment) ++treated[s.labels[p]];
    for (const Sample& s : dataset.control) ++controls[s.labels[p]];

    std::vector<std::string>& labels = index.labels_[p];
    for (const auto& [label, count] : treated) labels.emplace_back(label);
    for (const auto& [label, count] : controls) {
      if (!treated.contains(label)) labels.emplace_back(label);
    }
    std::sort(labels.begin(), labels.end());

    index.ell_[p].resize(labels.size());
    index.ell_control_[p].resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto t = treated.find(labels[i]);
      auto c = controls.find(labels[i]);
      index.ell_[p][i] = t == treated.end() ? 0 : t->second;
      index.ell_control_[p][i] = c == controls.end() ? 0 : c->second;
    }
  }
  return index;
}

int64_t IntersectionCounts::Count(const Cell& cell) const {
  auto it = cells.find(cell);
  return it == cells.end() ? 0 : it->second;
}

int64_t IntersectionCounts::Total() const {
  int64_t total = 0;
  for (const auto& [cell, count] : cells) total += count;
  return total;
}

int64_t Selection::Total() const {
  int64_t total = 0;
  for (const auto& [cell, count] : counts) total += count;
  return total;
}

int64_t Selection::Count(const Cell& cell) const {
  auto it = counts.find(cell);
  return it == counts.end() ? 0 : it->second;
}

IntersectionCounts CountIntersections(const Dataset& dataset,
                                      const LevelIndex& index) {
  IntersectionCounts out;
  for (const Sample& s : dataset.control) ++out.cells[index.CellOf(s)];
  return out;
}

ImbalanceReport Imbalance(const LevelIndex& index, const Selection& selection) {
  const int P = index.covariate_count();
  ImbalanceReport report;
  report.selected.resize(P);
  report.discrepancy.resize(P);
  report.excess.resize(P);
  report.deficit.resize(P);
  for (int p = 0; p < P; ++p) {
    report.selected[p].assign(index.level_count(p), 0);
  }
  for (const auto& [cell, count] : selection.counts) {
    if (static_cast<int>(cell.size()) != P) {
      throw Error(ErrorCode::kInvalidArgument, "cell has wrong arity");
    }
    if (count < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative cell count");
    }
    for (int p = 0; p < P; ++p) {
      if (cell[p] < 0 || cell[p] >= index.level_count(p)) {
        throw Error(ErrorCode::kInvalidArgument, "cell level out of range");
      }
      report.selected[p][cell[p]] += count;
    }
  }
  for (int p = 0; p < P; ++p) {
    const int k = index.level_count(p);
    report.discrepancy[p].resize(k);
    report.excess[p].resize(k);
    report.deficit[p].resize(k);
    for (int i = 0; i < k; ++i) {
      const int64_t dis = report.selected[p][i] - index.ell(p, i);
      report.discrepancy[p][i] = dis;
      report.excess[p][i] = std::max<int64_t>(0, dis);
      report.deficit[p][i] = std::max<int64_t>(0, -dis);
      report.total += std::abs(dis);
    }
  }
  return report;
}

ImbalanceReport Imbalance(const LevelIndex& index,
                          const IntersectionCounts& population,
                          const Selection& selection) {
  for (const auto& [cell, count] : selection.counts) {
    if (count > population.Count(cell)) {
      throw Error(ErrorCode::kCellOverflow,
                  "selection takes " + std::to_string(count) +
                      " from a cell of " +
                      std::to_string(population.Count(cell)));
    }
  }
  return Imbalance(index, selection);
}

Selection SelectionFromIds(const Dataset& dataset, const LevelIndex& index,
                           const std::vector<std::string>& ids) {
  std::unordered_map<std::string_view, const Sample*> by_id;
  by_id.reserve(dataset.control.size());
  for (const Sample& s : dataset.control) by_id.emplace(s.id, &s);
  std::unordered_set<std::string_view> seen;
  Selection selection;
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kUnknownId, "'" + id + "' is not a control id");
    }
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kDuplicateId, "id '" + id + "' selected twice");
    }
    ++selection.counts[index.CellOf(*it->second)];
  }
  return selection;
}

std::vector<std::string> Materialize(const Dataset& dataset,
                                     const LevelIndex& index,
                                     const Selection& selection,
                                     uint64_t seed) {
  std::map<Cell, std::vector<const std::string*>> members;
  for (const Sample& s : dataset.control) {
    members[index.CellOf(s)].push_back(&s.id);
  }
  Rng rng(seed);
  std::vector<std::string> ids;
  for (const auto& [cell, count] : selection.counts) {
    if (count == 0) continue;
    auto it = members.find(cell);
    const int64_t available =
        it == members.end() ? 0 : static_cast<int64_t>(it->second.size());
    if (count < 0 || count > available) {
      throw Error(ErrorCode::kCellOverflow,
                  "cannot pick " + std::to_string(count) + " of " +
                      std::to_string(available) + " controls in a cell");
    }
    std::vector<const std::string*>& pool = it->second;
    rng.Shuffle(std::span(pool));
    for (int64_t j = 0; j < count; ++j) ids.push_back(*pool[j]);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Dataset KappaExpand(const Dataset& dataset, int64_t kappa) {
  const int64_t n = dataset.n();
  if (kappa < 1 || n == 0 || kappa * n > dataset.n_control()) {
    throw Error(ErrorCode::kKappaOutOfRange,
                "kappa " + std::to_string(kappa) + " outside [1, n'/n] for n=" +
                    std::to_string(n) + ", n'=" +
                    std::to_string(dataset.n_control()));
  }
  if (kappa == 1) return dataset;
  Dataset out;
  out.covariate_count = dataset.covariate_count;
  out.covariate_names = dataset.covariate_names;
  out.control = dataset.control;
  out.treatment.reserve(dataset.treatment.size() * kappa);
  for (const Sample& s : dataset.treatment) {
    for (int64_t copy = 1; copy <= kappa; ++copy) {
      out.treatment.push_back(
          Sample{s.id + "#" + std::to_string(copy), s.labels});
    }
  }
  return out;
}

}  // namespace covbal
