#include "covbal/oracle.h"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <string>

#include "covbal/error.h"
#include "covbal/random.h"

namespace covbal::oracle {

namespace {

class Enumerator {
 public:
  Enumerator(const LevelIndex& index, const IntersectionCounts& counts)
      : index_(index) {
    for (const auto& [cell, u] : counts.cells) {
      cells_.push_back(cell);
      caps_.push_back(u);
    }
    suffix_cap_.assign(cells_.size() + 1, 0);
    for (std::size_t c = cells_.size(); c-- > 0;) {
      suffix_cap_[c] = suffix_cap_[c + 1] + caps_[c];
    }
    level_counts_.resize(index.covariate_count());
    for (int p = 0; p < index.covariate_count(); ++p) {
      level_counts_[p].assign(index.level_count(p), 0);
    }
    chosen_.assign(cells_.size(), 0);
  }

  OracleResult Run(int64_t q) {
    best_ = std::numeric_limits<int64_t>::max();
    Visit(0, q);
    OracleResult result;
    result.objective = best_;
    result.optimal_count = best_count_;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      if (best_vector_[c] > 0) result.argmin.counts[cells_[c]] = best_vector_[c];
    }
    return result;
  }

 private:
  void Visit(std::size_t c, int64_t remaining) {
    if (c == cells_.size()) {
      if (remaining == 0) Score();
      return;
    }
    const int64_t lo = std::max<int64_t>(0, remaining - suffix_cap_[c + 1]);
    const int64_t hi = std::min(caps_[c], remaining);
    for (int64_t s = lo; s <= hi; ++s) {
      chosen_[c] = s;
      Apply(c, s);
      Visit(c + 1, remaining - s);
      Apply(c, -s);
    }
    chosen_[c] = 0;
  }

  void Apply(std::size_t c, int64_t delta) {
    for (std::size_t p = 0; p < level_counts_.size(); ++p) {
      level_counts_[p][cells_[c][p]] += delta;
    }
  }

  void Score() {
    int64_t total = 0;
    for (std::size_t p = 0; p < level_counts_.size(); ++p) {
      for (std::size_t i = 0; i < level_counts_[p].size(); ++i) {
        total += std::abs(level_counts_[p][i] -
                          index_.ell(static_cast<int>(p), static_cast<int>(i)));
      }
    }
    if (total < best_) {
      best_ = total;
      best_count_ = 1;
      best_vector_ = chosen_;
    } else if (total == best_) {
      ++best_count_;
    }
  }

  const LevelIndex& index_;
  std::vector<Cell> cells_;
  std::vector<int64_t> caps_;
  std::vector<int64_t> suffix_cap_;
  std::vector<std::vector<int64_t>> level_counts_;
  std::vector<int64_t> chosen_;
  std::vector<int64_t> best_vector_;
  int64_t best_ = 0;
  int64_t best_count_ = 0;
};

}  // namespace

OracleResult ExactMinImbalance(const LevelIndex& index,
                               const IntersectionCounts& counts, int64_t q) {
  if (static_cast<int>(counts.cells.size()) > kMaxCells ||
      counts.Total() > kMaxControls) {
    throw Error(ErrorCode::kTooLarge,
                "oracle limited to " + std::to_string(kMaxCells) +
                    " cells and " + std::to_string(kMaxControls) +
                    " controls");
  }
  if (q < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "selection size must be nonnegative");
  }
  if (q > counts.Total()) {
    throw Error(ErrorCode::kQTooLarge,
                "selection size " + std::to_string(q) + " exceeds " +
                    std::to_string(counts.Total()) + " controls");
  }
  return Enumerator(index, counts).Run(q);
}

OracleResult ExactMinImbalance(const Dataset& dataset, int64_t q) {
  const LevelIndex index = IndexLevels(dataset);
  return ExactMinImbalance(index, CountIntersections(dataset, index), q);
}

void ThreeDMInstance::Validate() const {
  if (x_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "|X| must be positive");
  }
  std::set<Triple> seen;
  for (const Triple& t : triples) {
    for (int v : t) {
      if (v < 1 || v > x_size) {
        throw Error(ErrorCode::kInvalidArgument,
                    "triple coordinate outside 1..|X|");
      }
    }
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate triple in U");
    }
  }
  if (!planted) return;
  if (static_cast<int>(planted->size()) != x_size) {
    throw Error(ErrorCode::kInvalidArgument, "planted matching size != |X|");
  }
  std::array<std::vector<char>, 3> covered;
  for (auto& c : covered) c.assign(x_size + 1, 0);
  for (const Triple& t : *planted) {
    if (!seen.contains(t)) {
      throw Error(ErrorCode::kInvalidArgument, "planted triple not in U");
    }
    for (int k = 0; k < 3; ++k) {
      if (covered[k][t[k]]++) {
        throw Error(ErrorCode::kInvalidArgument,
                    "planted triples share a coordinate");
      }
    }
  }
}

Dataset Gen3dmDataset(const ThreeDMInstance& instance) {
  instance.Validate();
  Dataset d;
  d.covariate_count = 3;
  d.covariate_names = {"x1", "x2", "x3"};
  for (int j = 1; j <= instance.x_size; ++j) {
    const std::string label = std::to_string(j);
    d.treatment.push_back(
        Sample{"t" + std::to_string(j), {label, label, label}});
  }
  for (std::size_t k = 0; k < instance.triples.size(); ++k) {
    const Triple& t = instance.triples[k];
    d.control.push_back(Sample{"c" + std::to_string(k + 1),
                               {std::to_string(t[0]), std::to_string(t[1]),
                                std::to_string(t[2])}});
  }
  return d;
}

ThreeDMInstance RandomPlanted3dm(int x_size, int triple_count, uint64_t seed) {
  if (x_size < 1 || triple_count < x_size) {
    throw Error(ErrorCode::kInvalidArgument,
                "need |X| >= 1 and at least |X| triples");
  }
  const int64_t possible = static_cast<int64_t>(x_size) * x_size * x_size;
  if (triple_count > possible) {
    throw Error(ErrorCode::kInvalidArgument, "more triples than X^3 holds");
  }
  Rng rng(seed);
  std::vector<int> pi2(x_size), pi3(x_size);
  std::iota(pi2.begin(), pi2.end(), 1);
  std::iota(pi3.begin(), pi3.end(), 1);
  rng.Shuffle(std::span(pi2));
  rng.Shuffle(std::span(pi3));

  ThreeDMInstance inst;
  inst.x_size = x_size;
  std::set<Triple> used;
  std::vector<Triple> planted;
  for (int i = 0; i < x_size; ++i) {
    const Triple t{i + 1, pi2[i], pi3[i]};
    planted.push_back(t);
    used.insert(t);
    inst.triples.push_back(t);
  }
  while (static_cast<int>(inst.triples.size()) < triple_count) {
    Triple t;
    for (int& v : t) v = 1 + static_cast<int>(rng.UniformBelow(x_size));
    if (used.insert(t).second) inst.triples.push_back(t);
  }
  rng.Shuffle(std::span(inst.triples));
  inst.planted = std::move(planted);
  return inst;
}

bool HasPerfectMatching(const ThreeDMInstance& instance) {
  const int m = static_cast<int>(instance.triples.size());
  if (m > 24) {
    throw Error(ErrorCode::kTooLarge, "matching brute force limited to 24 triples");
  }
  for (uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != instance.x_size) continue;
    std::array<std::vector<char>, 3> covered;
    for (auto& c : covered) c.assign(instance.x_size + 1, 0);
    bool ok = true;
    for (int k = 0; k < m && ok; ++k) {
      if (!(mask >> k & 1u)) continue;
      for (int c = 0; c < 3 && ok; ++c) {
        ok = !covered[c][instance.triples[k][c]]++;
      }
    }
    if (ok) return true;
  }
  return false;
}

Dataset RandomInstance(int covariate_count, int64_t n, int64_t n_control,
                       const std::vector<int>& levels, uint64_t seed) {
  if (covariate_count < 1 || n < 1 || n_control < 0 ||
      static_cast<int>(levels.size()) != covariate_count ||
      std::any_of(levels.begin(), levels.end(), [](int k) { return k < 1; })) {
    throw Error(ErrorCode::kInvalidArgument, "bad random instance parameters");
  }
  Rng rng(seed);
  Dataset d;
  d.covariate_count = covariate_count;
  for (int p = 0; p < covariate_count; ++p) {
    d.covariate_names.push_back("x" + std::to_string(p + 1));
  }
  auto draw = [&](const std::string& id) {
    Sample s{id, {}};
    s.labels.reserve(covariate_count);
    for (int p = 0; p < covariate_count; ++p) {
      s.labels.push_back("v" + std::to_string(1 + rng.UniformBelow(levels[p])));
    }
    return s;
  };
  d.treatment.reserve(n);
  d.control.reserve(n_control);
  for (int64_t j = 1; j <= n; ++j) d.treatment.push_back(draw("t" + std::to_string(j)));
  for (int64_t j = 1; j <= n_control; ++j) {
    d.control.push_back(draw("c" + std::to_string(j)));
  }
  return d;
}

}  // namespace covbal::oracle
