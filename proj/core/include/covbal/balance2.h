#ifndef COVBAL_BALANCE2_H_
#define COVBAL_BALANCE2_H_

// Exact two-covariate min-imbalance solvers.
//
// Min-cost-flow route: level nodes (1,i) carry supply ell_{1,i}, level nodes
// (2,j) carry demand ell_{2,j}, cell arcs (1,i)->(2,j) have capacity u_{ij}
// and cost 0, and unit-cost excess/deficit arcs connect each level node to a
// hub per covariate. The hub supplies are q-n and n-q, so the cell flow
// totals q and the cost equals the imbalance.
//
// Max-flow route: s->(1,i) with capacity ell_{1,i}, cell arcs as above,
// (2,j)->t with capacity ell_{2,j}. The maximum flow x* has no excess at any
// level; RecoverSelection then tops it up to q samples.

#include <cstdint>
#include <optional>
#include <vector>

#include "covbal/balance.h"
#include "covbal/netflow.h"

namespace covbal::balance2 {

enum class Method { kMinCostFlow, kMaxFlow };

enum class ArcRole { kCell, kExcess, kDeficit };

// What a network arc stands for: a cell count x_{i1,i2}, or an excess /
// deficit variable of level `level` of covariate `covariate` (0 or 1).
struct ArcMeaning {
  ArcRole role = ArcRole::kCell;
  int covariate = -1;
  int level = -1;
  Cell cell;
};

struct McnfGraph {
  netflow::FlowNetwork network;
  std::vector<ArcMeaning> legend;  // indexed by ArcId
  netflow::NodeId hub1 = 0;
  netflow::NodeId hub2 = 0;
};

struct MaxFlowGraph {
  netflow::FlowNetwork network;
  std::vector<ArcMeaning> legend;
  netflow::NodeId source = 0;
  netflow::NodeId sink = 0;
};

// Node order: (1,0..k1-1), (2,0..k2-1), hub 1, hub 2. Arc order: cell arcs
// in lexicographic cell order, then per covariate-1 level its excess and
// deficit arcs, then the same for covariate 2.
// Throws Error(kNotTwoCovariates) unless P == 2.
McnfGraph BuildMcnfGraph(const LevelIndex& index,
                         const IntersectionCounts& counts, int64_t q);

// Node order: s, (1,*), (2,*), t. Arc order: source arcs, cell arcs, sink
// arcs.
MaxFlowGraph BuildMaxFlowGraph(const LevelIndex& index,
                               const IntersectionCounts& counts);

struct Solve2Result {
  Selection selection;
  int64_t objective = 0;
  Method method = Method::kMinCostFlow;
  int64_t q = 0;
  // Max-flow route only.
  std::optional<int64_t> f_star;
  std::optional<int64_t> s_plus_size;
  std::optional<int64_t> lbar1;
  std::optional<int64_t> lbar2;
  // Whether the flow solved on the way passed its certificate.
  bool certified = false;
};

Solve2Result SolveMcnf2(const Dataset& dataset, int64_t q);
Solve2Result SolveMaxFlow2(const Dataset& dataset, int64_t q);
Solve2Result Solve2(const Dataset& dataset, int64_t q, Method method);

struct Recovery {
  Selection selection;
  int64_t before_padding = 0;  // |S''|
  int64_t s_plus_size = 0;     // |S+|
};

// Tops the max-flow cell counts up to q samples: first from cells where a
// covariate-1 or covariate-2 level is still short of its treatment count
// (cells scanned lexicographically), then pads from the first cells with
// spare controls. Requires sum(xstar) <= q.
// Throws Error(kQTooLarge) when q > n'.
Recovery RecoverSelection(const LevelIndex& index,
                          const IntersectionCounts& counts,
                          const Selection& xstar, int64_t q);

// Sum over levels of min(ell, ell_control) for covariate p.
int64_t LevelOverlap(const LevelIndex& index, int p);

struct ThreeTypeSizes {
  int64_t s1 = 0;
  int64_t s2 = 0;
  int64_t s3 = 0;
};

// Partitions a size-n selection: S1 takes samples whose two levels are both
// over target, S2 samples with one level over target, S3 the rest. Every
// size-n selection then satisfies IM = 4n - 2*s2 - 4*s3.
// Throws Error(kWrongSelectionSize) unless the selection has n samples.
ThreeTypeSizes Classify3Type(const LevelIndex& index,
                             const Selection& selection);

}  // namespace covbal::balance2

#endif  // COVBAL_BALANCE2_H_
