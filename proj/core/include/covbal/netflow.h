#ifndef COVBAL_NETFLOW_H_
#define COVBAL_NETFLOW_H_

// Integer min-cost-flow and max-flow solvers with optimality certificates.
//
// A FlowNetwork is an immutable description (nodes, supplies, arcs). Each
// solver call builds a private residual graph, so a network may be shared by
// concurrent solves.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace covbal::netflow {

using NodeId = int32_t;
using ArcId = int32_t;
using FlowValue = int64_t;
using CostValue = int64_t;

// Capacity sentinel for uncapacitated arcs. Min-cost flow resolves it to the
// total positive supply of the network, which bounds the flow on any arc of
// a cycle-free optimum when costs are nonnegative.
inline constexpr FlowValue kUnbounded = -1;

struct Arc {
  NodeId tail = 0;
  NodeId head = 0;
  FlowValue lower = 0;
  FlowValue capacity = 0;  // or kUnbounded
  CostValue cost = 0;
};

class FlowNetwork {
 public:
  FlowNetwork() = default;
  explicit FlowNetwork(int node_count);

  NodeId AddNode(FlowValue supply = 0);
  ArcId AddArc(NodeId tail, NodeId head, FlowValue capacity, CostValue cost = 0,
               FlowValue lower = 0);
  void SetSupply(NodeId node, FlowValue supply);

  int node_count() const { return static_cast<int>(supplies_.size()); }
  int arc_count() const { return static_cast<int>(arcs_.size()); }
  const std::vector<FlowValue>& supplies() const { return supplies_; }
  FlowValue supply(NodeId node) const { return supplies_[node]; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const Arc& arc(ArcId id) const { return arcs_[id]; }

  // Sum of positive supplies; the value kUnbounded resolves to.
  FlowValue TotalSupply() const;
  FlowValue ResolvedCapacity(ArcId id) const;

  // Throws Error(kInvalidNetwork) when an arc references a missing node or
  // has lower > capacity.
  void Validate() const;

  // Line-oriented text form:
  //   nodes <count>
  //   supply <node> <b>        (one line per nonzero supply)
  //   <tail> <head> <lower> <cap|inf> <cost>
  std::string DebugDump() const;
  static FlowNetwork ParseDump(std::string_view text);

 private:
  std::vector<FlowValue> supplies_;
  std::vector<Arc> arcs_;
};

struct FlowAssignment {
  std::vector<FlowValue> flow;  // indexed by ArcId
  // Total cost for min-cost flow, flow value for max-flow.
  int64_t objective = 0;
  // Present for min-cost flow: cost + pi[tail] - pi[head] >= 0 holds on
  // every residual arc.
  std::optional<std::vector<CostValue>> potentials;
};

// Successive shortest paths with node potentials and a binary-heap
// label-setting search. Requires nonnegative costs and a zero supply sum.
// Throws Error(kInfeasible) when the supplies cannot be routed.
FlowAssignment SolveMinCostFlow(const FlowNetwork& network);

// Blocking flows over BFS level graphs. Costs and supplies are ignored.
FlowAssignment SolveMaxFlow(const FlowNetwork& network, NodeId source,
                            NodeId sink);

struct CutCertificate {
  bool optimal = false;
  // Nodes reachable from the source in the residual network, ascending.
  std::vector<NodeId> source_side;
};

// Throws Error(kInfeasibleAssignment) if the flow violates bounds or
// conservation at a node other than source and sink.
CutCertificate CertifyMaxFlow(const FlowNetwork& network,
                              const FlowAssignment& assignment, NodeId source,
                              NodeId sink);

// Throws Error(kInfeasibleAssignment) if the flow is infeasible and
// Error(kMissingPotentials) if no potentials are attached.
bool CertifyMinCostFlow(const FlowNetwork& network,
                        const FlowAssignment& assignment);

// Recomputes sum(cost * flow), overflow-checked.
int64_t FlowCost(const FlowNetwork& network, const std::vector<FlowValue>& flow);

}  // namespace covbal::netflow

#endif  // COVBAL_NETFLOW_H_
