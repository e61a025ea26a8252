#include "covbal/balance2.h"

#include <algorithm>
#include <string>

#include "covbal/error.h"

namespace covbal::balance2 {

namespace {

void RequireTwoCovariates(const LevelIndex& index) {
  if (index.covariate_count() != 2) {
    throw Error(ErrorCode::kNotTwoCovariates,
                "exact flow solvers need exactly 2 covariates, got " +
                    std::to_string(index.covariate_count()));
  }
}

void RequireSelectionSize(const LevelIndex& index, int64_t q) {
  if (q < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "selection size must be nonnegative");
  }
  if (q > index.n_control()) {
    throw Error(ErrorCode::kQTooLarge,
                "selection size " + std::to_string(q) + " exceeds " +
                    std::to_string(index.n_control()) + " controls");
  }
}

}  // namespace

McnfGraph BuildMcnfGraph(const LevelIndex& index,
                         const IntersectionCounts& counts, int64_t q) {
  RequireTwoCovariates(index);
  RequireSelectionSize(index, q);
  const int k1 = index.level_count(0);
  const int k2 = index.level_count(1);
  const int64_t n = index.n();
  // Stands in for the uncapacitated excess/deficit arcs.
  const int64_t bound = n + index.n_control();

  McnfGraph g;
  g.network = netflow::FlowNetwork(k1 + k2 + 2);
  g.hub1 = k1 + k2;
  g.hub2 = k1 + k2 + 1;
  for (int i = 0; i < k1; ++i) g.network.SetSupply(i, index.ell(0, i));
  for (int j = 0; j < k2; ++j) g.network.SetSupply(k1 + j, -index.ell(1, j));
  g.network.SetSupply(g.hub1, q - n);
  g.network.SetSupply(g.hub2, n - q);

  for (const auto& [cell, u] : counts.cells) {
    g.network.AddArc(cell[0], k1 + cell[1], u, 0);
    g.legend.push_back({ArcRole::kCell, -1, -1, cell});
  }
  for (int i = 0; i < k1; ++i) {
    g.network.AddArc(g.hub1, i, bound, 1);
    g.legend.push_back({ArcRole::kExcess, 0, i, {}});
    g.network.AddArc(i, g.hub1, bound, 1);
    g.legend.push_back({ArcRole::kDeficit, 0, i, {}});
  }
  for (int j = 0; j < k2; ++j) {
    g.network.AddArc(k1 + j, g.hub2, bound, 1);
    g.legend.push_back({ArcRole::kExcess, 1, j, {}});
    g.network.AddArc(g.hub2, k1 + j, bound, 1);
    g.legend.push_back({ArcRole::kDeficit, 1, j, {}});
  }
  return g;
}

MaxFlowGraph BuildMaxFlowGraph(const LevelIndex& index,
                               const IntersectionCounts& counts) {
  RequireTwoCovariates(index);
  const int k1 = index.level_count(0);
  const int k2 = index.level_count(1);

  MaxFlowGraph g;
  g.network = netflow::FlowNetwork(k1 + k2 + 2);
  g.source = 0;
  g.sink = k1 + k2 + 1;
  for (int i = 0; i < k1; ++i) {
    g.network.AddArc(g.source, 1 + i, index.ell(0, i));
    g.legend.push_back({ArcRole::kDeficit, 0, i, {}});
  }
  for (const auto& [cell, u] : counts.cells) {
    g.network.AddArc(1 + cell[0], 1 + k1 + cell[1], u);
    g.legend.push_back({ArcRole::kCell, -1, -1, cell});
  }
  for (int j = 0; j < k2; ++j) {
    g.network.AddArc(1 + k1 + j, g.sink, index.ell(1, j));
    g.legend.push_back({ArcRole::kDeficit, 1, j, {}});
  }
  return g;
}

namespace {

Selection CellFlows(const std::vector<ArcMeaning>& legend,
                    const std::vector<netflow::FlowValue>& flow) {
  Selection selection;
  for (std::size_t a = 0; a < legend.size(); ++a) {
    if (legend[a].role == ArcRole::kCell && flow[a] > 0) {
      selection.counts[legend[a].cell] = flow[a];
    }
  }
  return selection;
}

}  // namespace

Solve2Result SolveMcnf2(const Dataset& dataset, int64_t q) {
  const LevelIndex index = IndexLevels(dataset);
  const IntersectionCounts counts = CountIntersections(dataset, index);
  const McnfGraph g = BuildMcnfGraph(index, counts, q);
  const netflow::FlowAssignment flow = netflow::SolveMinCostFlow(g.network);

  Solve2Result result;
  result.method = Method::kMinCostFlow;
  result.q = q;
  result.selection = CellFlows(g.legend, flow.flow);
  result.objective = flow.objective;
  result.certified = netflow::CertifyMinCostFlow(g.network, flow);
  if (Imbalance(index, counts, result.selection).total != result.objective) {
    throw Error(ErrorCode::kCertificateFailure,
                "min-cost-flow cost differs from the selection's imbalance");
  }
  return result;
}

int64_t LevelOverlap(const LevelIndex& index, int p) {
  int64_t total = 0;
  for (int i = 0; i < index.level_count(p); ++i) {
    total += std::min(index.ell(p, i), index.ell_control(p, i));
  }
  return total;
}

Recovery RecoverSelection(const LevelIndex& index,
                          const IntersectionCounts& counts,
                          const Selection& xstar, int64_t q) {
  RequireTwoCovariates(index);
  RequireSelectionSize(index, q);
  Recovery out;
  out.selection = xstar;
  int64_t size = 0;
  std::vector<int64_t> short1 = index.ell(0);
  std::vector<int64_t> short2 = index.ell(1);
  for (const auto& [cell, x] : xstar.counts) {
    if (x < 0 || x > counts.Count(cell)) {
      throw Error(ErrorCode::kCellOverflow, "initial counts exceed a cell");
    }
    size += x;
    short1[cell[0]] -= x;
    short2[cell[1]] -= x;
  }
  if (size > q) {
    throw Error(ErrorCode::kInvalidArgument,
                "initial selection already exceeds the target size");
  }

  // One pass suffices: shortfalls and spare capacity only shrink, so a cell
  // that stops qualifying never qualifies again.
  for (const auto& [cell, u] : counts.cells) {
    if (size == q) break;
    const int64_t want = std::max(short1[cell[0]], short2[cell[1]]);
    if (want <= 0) continue;
    int64_t& chosen = out.selection.counts[cell];
    const int64_t take = std::min({u - chosen, q - size, want});
    if (take <= 0) continue;
    chosen += take;
    size += take;
    short1[cell[0]] -= take;
    short2[cell[1]] -= take;
  }
  out.before_padding = size;
  out.s_plus_size = q - size;

  for (const auto& [cell, u] : counts.cells) {
    if (size == q) break;
    int64_t& chosen = out.selection.counts[cell];
    const int64_t take = std::min(u - chosen, q - size);
    chosen += take;
    size += take;
  }
  std::erase_if(out.selection.counts,
                [](const auto& entry) { return entry.second == 0; });
  return out;
}

Solve2Result SolveMaxFlow2(const Dataset& dataset, int64_t q) {
  const LevelIndex index = IndexLevels(dataset);
  const IntersectionCounts counts = CountIntersections(dataset, index);
  RequireTwoCovariates(index);
  RequireSelectionSize(index, q);
  const MaxFlowGraph g = BuildMaxFlowGraph(index, counts);
  const netflow::FlowAssignment flow =
      netflow::SolveMaxFlow(g.network, g.source, g.sink);

  Solve2Result result;
  result.method = Method::kMaxFlow;
  result.q = q;
  result.f_star = flow.objective;
  result.lbar1 = LevelOverlap(index, 0);
  result.lbar2 = LevelOverlap(index, 1);
  result.certified =
      netflow::CertifyMaxFlow(g.network, flow, g.source, g.sink).optimal;

  Selection xstar = CellFlows(g.legend, flow.flow);
  if (q < flow.objective) {
    // Any q units of x* are optimal; drop from the back.
    int64_t surplus = flow.objective - q;
    for (auto it = xstar.counts.rbegin();
         it != xstar.counts.rend() && surplus > 0; ++it) {
      const int64_t drop = std::min(it->second, surplus);
      it->second -= drop;
      surplus -= drop;
    }
    std::erase_if(xstar.counts,
                  [](const auto& entry) { return entry.second == 0; });
    result.selection = std::move(xstar);
    result.s_plus_size = 0;
  } else {
    Recovery recovery = RecoverSelection(index, counts, xstar, q);
    result.selection = std::move(recovery.selection);
    result.s_plus_size = recovery.s_plus_size;
  }
  result.objective = Imbalance(index, counts, result.selection).total;
  return result;
}

Solve2Result Solve2(const Dataset& dataset, int64_t q, Method method) {
  return method == Method::kMinCostFlow ? SolveMcnf2(dataset, q)
                                        : SolveMaxFlow2(dataset, q);
}

ThreeTypeSizes Classify3Type(const LevelIndex& index,
                             const Selection& selection) {
  RequireTwoCovariates(index);
  if (selection.Total() != index.n()) {
    throw Error(ErrorCode::kWrongSelectionSize,
                "classification needs a selection of size " +
                    std::to_string(index.n()) + ", got " +
                    std::to_string(selection.Total()));
  }
  const ImbalanceReport report = Imbalance(index, selection);
  std::vector<int64_t> dis1 = report.discrepancy[0];
  std::vector<int64_t> dis2 = report.discrepancy[1];
  Selection remaining = selection;

  ThreeTypeSizes sizes;
  // Both phases are single passes for the same reason as in recovery:
  // discrepancies and remaining counts never grow.
  for (auto& [cell, left] : remaining.counts) {
    int64_t& a = dis1[cell[0]];
    int64_t& b = dis2[cell[1]];
    if (a <= 0 || b <= 0) continue;
    const int64_t take = std::min({left, a, b});
    left -= take;
    a -= take;
    b -= take;
    sizes.s1 += take;
  }
  for (auto& [cell, left] : remaining.counts) {
    int64_t& a = dis1[cell[0]];
    int64_t& b = dis2[cell[1]];
    const int64_t take = std::min(left, std::max(a, b));
    if (take <= 0) continue;
    left -= take;
    a -= take;
    b -= take;
    sizes.s2 += take;
  }
  sizes.s3 = index.n() - sizes.s1 - sizes.s2;
  return sizes;
}

}  // namespace covbal::balance2
