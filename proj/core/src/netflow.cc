#include "covbal/netflow.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <utility>

#include "covbal/error.h"
#include "internal/checked.h"

namespace covbal::netflow {

using internal::CheckedAdd;
using internal::CheckedMul;

FlowNetwork::FlowNetwork(int node_count) {
  if (node_count < 0) {
    throw Error(ErrorCode::kInvalidNetwork, "negative node count");
  }
  supplies_.assign(node_count, 0);
}

NodeId FlowNetwork::AddNode(FlowValue supply) {
  supplies_.push_back(supply);
  return static_cast<NodeId>(supplies_.size() - 1);
}

ArcId FlowNetwork::AddArc(NodeId tail, NodeId head, FlowValue capacity,
                          CostValue cost, FlowValue lower) {
  arcs_.push_back(Arc{tail, head, lower, capacity, cost});
  return static_cast<ArcId>(arcs_.size() - 1);
}

void FlowNetwork::SetSupply(NodeId node, FlowValue supply) {
  if (node < 0 || node >= node_count()) {
    throw Error(ErrorCode::kInvalidNetwork,
                "supply for unknown node " + std::to_string(node));
  }
  supplies_[node] = supply;
}

FlowValue FlowNetwork::TotalSupply() const {
  FlowValue total = 0;
  for (FlowValue b : supplies_) {
    if (b > 0) total = CheckedAdd(total, b);
  }
  return total;
}

FlowValue FlowNetwork::ResolvedCapacity(ArcId id) const {
  const Arc& a = arcs_[id];
  if (a.capacity != kUnbounded) return a.capacity;
  return std::max(TotalSupply(), a.lower);
}

void FlowNetwork::Validate() const {
  for (std::size_t i = 0; i < arcs_.size(); ++i) {
    const Arc& a = arcs_[i];
    const std::string where = "arc " + std::to_string(i);
    if (a.tail < 0 || a.tail >= node_count() || a.head < 0 ||
        a.head >= node_count()) {
      throw Error(ErrorCode::kInvalidNetwork, where + ": node out of range");
    }
    if (a.lower < 0) {
      throw Error(ErrorCode::kInvalidNetwork, where + ": negative lower bound");
    }
    if (a.capacity != kUnbounded && a.capacity < a.lower) {
      throw Error(ErrorCode::kInvalidNetwork,
                  where + ": capacity below lower bound");
    }
  }
}

std::string FlowNetwork::DebugDump() const {
  std::ostringstream out;
  out << "nodes " << node_count() << "\n";
  for (int v = 0; v < node_count(); ++v) {
    if (supplies_[v] != 0) out << "supply " << v << " " << supplies_[v] << "\n";
  }
  for (const Arc& a : arcs_) {
    out << a.tail << " " << a.head << " " << a.lower << " ";
    if (a.capacity == kUnbounded) {
      out << "inf";
    } else {
      out << a.capacity;
    }
    out << " " << a.cost << "\n";
  }
  return out.str();
}

FlowNetwork FlowNetwork::ParseDump(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  FlowNetwork network;
  bool have_header = false;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kParseError,
                "network dump line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first) || first[0] == '#') continue;
    if (first == "nodes") {
      int count = 0;
      if (have_header || !(fields >> count) || count < 0) fail("bad header");
      network = FlowNetwork(count);
      have_header = true;
      continue;
    }
    if (!have_header) fail("missing 'nodes' header");
    if (first == "supply") {
      NodeId node = 0;
      FlowValue b = 0;
      if (!(fields >> node >> b)) fail("bad supply line");
      network.SetSupply(node, b);
      continue;
    }
    Arc a;
    std::string cap;
    try {
      a.tail = std::stoi(first);
    } catch (const std::exception&) {
      fail("bad tail");
    }
    if (!(fields >> a.head >> a.lower >> cap >> a.cost)) fail("bad arc line");
    if (cap == "inf") {
      a.capacity = kUnbounded;
    } else {
      try {
        a.capacity = std::stoll(cap);
      } catch (const std::exception&) {
        fail("bad capacity");
      }
    }
    network.AddArc(a.tail, a.head, a.capacity, a.cost, a.lower);
  }
  if (!have_header) fail("empty dump");
  network.Validate();
  return network;
}

int64_t FlowCost(const FlowNetwork& network,
                 const std::vector<FlowValue>& flow) {
  int64_t total = 0;
  for (int i = 0; i < network.arc_count(); ++i) {
    total = CheckedAdd(total, CheckedMul(network.arc(i).cost, flow[i]));
  }
  return total;
}

namespace {

// Forward-star residual graph. Arc a of the network owns residual edges 2a
// (forward) and 2a+1 (reverse).
class Residual {
 public:
  Residual(const FlowNetwork& network, bool lower_shifted)
      : first_(network.node_count(), -1) {
    const int m = network.arc_count();
    to_.resize(2 * m);
    cap_.resize(2 * m);
    cost_.resize(2 * m);
    next_.resize(2 * m);
    for (int a = 0; a < m; ++a) {
      const Arc& arc = network.arc(a);
      FlowValue cap = network.ResolvedCapacity(a);
      if (lower_shifted) cap -= arc.lower;
      Link(2 * a, arc.tail, arc.head, cap, arc.cost);
      Link(2 * a + 1, arc.head, arc.tail, 0, -arc.cost);
    }
  }

  int first(NodeId v) const { return first_[v]; }
  int next(int e) const { return next_[e]; }
  NodeId to(int e) const { return to_[e]; }
  NodeId from(int e) const { return to_[e ^ 1]; }
  FlowValue cap(int e) const { return cap_[e]; }
  CostValue cost(int e) const { return cost_[e]; }

  void Push(int e, FlowValue amount) {
    cap_[e] -= amount;
    cap_[e ^ 1] += amount;
  }

  // Flow on network arc a relative to the shifted lower bound.
  FlowValue ShiftedFlow(ArcId a) const { return cap_[2 * a + 1]; }

 private:
  void Link(int e, NodeId from, NodeId to, FlowValue cap, CostValue cost) {
    to_[e] = to;
    cap_[e] = cap;
    cost_[e] = cost;
    next_[e] = first_[from];
    first_[from] = e;
  }

  std::vector<int> first_;
  std::vector<NodeId> to_;
  std::vector<FlowValue> cap_;
  std::vector<CostValue> cost_;
  std::vector<int> next_;
};

constexpr CostValue kInfDist = std::numeric_limits<CostValue>::max();

void CheckNode(const FlowNetwork& network, NodeId v, const char* what) {
  if (v < 0 || v >= network.node_count()) {
    throw Error(ErrorCode::kInvalidNetwork,
                std::string(what) + " node out of range");
  }
}

}  // namespace

FlowAssignment SolveMinCostFlow(const FlowNetwork& network) {
  network.Validate();
  const int n = network.node_count();
  const int m = network.arc_count();

  FlowValue supply_sum = 0;
  for (FlowValue b : network.supplies()) supply_sum = CheckedAdd(supply_sum, b);
  if (supply_sum != 0) {
    throw Error(ErrorCode::kInvalidNetwork,
                "supplies sum to " + std::to_string(supply_sum) + ", not 0");
  }
  for (int a = 0; a < m; ++a) {
    if (network.arc(a).cost < 0) {
      throw Error(ErrorCode::kInvalidNetwork,
                  "arc " + std::to_string(a) + " has negative cost");
    }
  }

  // Lower bounds are pre-routed; the residual problem has zero lower bounds.
  std::vector<FlowValue> excess = network.supplies();
  for (int a = 0; a < m; ++a) {
    const Arc& arc = network.arc(a);
    excess[arc.tail] -= arc.lower;
    excess[arc.head] += arc.lower;
  }
  Residual g(network, /*lower_shifted=*/true);

  std::vector<CostValue> potential(n, 0);
  std::vector<CostValue> dist(n);
  std::vector<int> pred_edge(n);
  std::vector<char> done(n);
  using Entry = std::pair<CostValue, NodeId>;

  NodeId source = 0;
  while (true) {
    while (source < n && excess[source] <= 0) ++source;
    if (source == n) break;

    std::fill(dist.begin(), dist.end(), kInfDist);
    std::fill(pred_edge.begin(), pred_edge.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[source] = 0;
    heap.emplace(0, source);
    NodeId target = -1;
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (done[u]) continue;
      done[u] = 1;
      if (excess[u] < 0) {
        target = u;
        break;
      }
      for (int e = g.first(u); e != -1; e = g.next(e)) {
        if (g.cap(e) <= 0) continue;
        const NodeId v = g.to(e);
        if (done[v]) continue;
        const CostValue reduced = g.cost(e) + potential[u] - potential[v];
        const CostValue nd = CheckedAdd(d, reduced);
        if (nd < dist[v]) {
          dist[v] = nd;
          pred_edge[v] = e;
          heap.emplace(nd, v);
        }
      }
    }

    if (target == -1) {
      FlowValue remainder = 0;
      for (FlowValue b : excess) {
        if (b > 0) remainder += b;
      }
      throw Error(ErrorCode::kInfeasible,
                  "no feasible flow: " + std::to_string(remainder) +
                      " units of supply cannot reach a demand node");
    }

    const CostValue target_dist = dist[target];
    for (int v = 0; v < n; ++v) {
      potential[v] = CheckedAdd(potential[v], std::min(dist[v], target_dist));
    }

    FlowValue delta = std::min(excess[source], -excess[target]);
    for (NodeId v = target; v != source; v = g.from(pred_edge[v])) {
      delta = std::min(delta, g.cap(pred_edge[v]));
    }
    for (NodeId v = target; v != source; v = g.from(pred_edge[v])) {
      g.Push(pred_edge[v], delta);
    }
    excess[source] -= delta;
    excess[target] += delta;
  }

  FlowAssignment result;
  result.flow.resize(m);
  for (int a = 0; a < m; ++a) {
    result.flow[a] = network.arc(a).lower + g.ShiftedFlow(a);
  }
  result.objective = FlowCost(network, result.flow);
  result.potentials = std::move(potential);
  return result;
}

FlowAssignment SolveMaxFlow(const FlowNetwork& network, NodeId source,
                            NodeId sink) {
  network.Validate();
  CheckNode(network, source, "source");
  CheckNode(network, sink, "sink");
  for (int a = 0; a < network.arc_count(); ++a) {
    const Arc& arc = network.arc(a);
    if (arc.capacity == kUnbounded) {
      throw Error(ErrorCode::kInvalidNetwork,
                  "max-flow needs finite capacities (arc " + std::to_string(a) +
                      ")");
    }
    if (arc.lower != 0) {
      throw Error(ErrorCode::kInvalidNetwork,
                  "max-flow needs zero lower bounds (arc " + std::to_string(a) +
                      ")");
    }
  }

  FlowAssignment result;
  result.flow.assign(network.arc_count(), 0);
  if (source == sink) return result;

  const int n = network.node_count();
  Residual g(network, /*lower_shifted=*/false);
  std::vector<int> level(n);
  std::vector<int> current(n);
  std::vector<int> path;
  FlowValue total = 0;

  auto build_levels = [&] {
    std::fill(level.begin(), level.end(), -1);
    std::queue<NodeId> queue;
    level[source] = 0;
    queue.push(source);
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop();
      for (int e = g.first(u); e != -1; e = g.next(e)) {
        const NodeId v = g.to(e);
        if (g.cap(e) > 0 && level[v] < 0) {
          level[v] = level[u] + 1;
          queue.push(v);
        }
      }
    }
    return level[sink] >= 0;
  };

  while (build_levels()) {
    for (int v = 0; v < n; ++v) current[v] = g.first(v);
    path.clear();
    NodeId u = source;
    while (true) {
      if (u == sink) {
        FlowValue delta = std::numeric_limits<FlowValue>::max();
        for (int e : path) delta = std::min(delta, g.cap(e));
        std::size_t retreat = path.size();
        for (std::size_t k = 0; k < path.size(); ++k) {
          g.Push(path[k], delta);
          if (g.cap(path[k]) == 0 && retreat == path.size()) retreat = k;
        }
        total = CheckedAdd(total, delta);
        path.resize(retreat);
        u = path.empty() ? source : g.to(path.back());
        continue;
      }
      int& e = current[u];
      while (e != -1 && (g.cap(e) <= 0 || level[g.to(e)] != level[u] + 1)) {
        e = g.next(e);
      }
      if (e != -1) {
        path.push_back(e);
        u = g.to(e);
        continue;
      }
      if (u == source) break;
      level[u] = -1;  // dead end for this phase
      path.pop_back();
      u = path.empty() ? source : g.to(path.back());
      current[u] = g.next(current[u]);
    }
  }

  for (int a = 0; a < network.arc_count(); ++a) {
    result.flow[a] = g.ShiftedFlow(a);
  }
  result.objective = total;
  return result;
}

namespace {

// Net outflow per node; throws kInfeasibleAssignment on a bound violation.
std::vector<FlowValue> CheckBoundsAndNetOutflow(
    const FlowNetwork& network, const FlowAssignment& assignment) {
  if (static_cast<int>(assignment.flow.size()) != network.arc_count()) {
    throw Error(ErrorCode::kInfeasibleAssignment,
                "flow vector has " + std::to_string(assignment.flow.size()) +
                    " entries for " + std::to_string(network.arc_count()) +
                    " arcs");
  }
  std::vector<FlowValue> net(network.node_count(), 0);
  for (int a = 0; a < network.arc_count(); ++a) {
    const Arc& arc = network.arc(a);
    const FlowValue f = assignment.flow[a];
    if (f < arc.lower || f > network.ResolvedCapacity(a)) {
      throw Error(ErrorCode::kInfeasibleAssignment,
                  "arc " + std::to_string(a) + " flow " + std::to_string(f) +
                      " outside its bounds");
    }
    net[arc.tail] = CheckedAdd(net[arc.tail], f);
    net[arc.head] = CheckedAdd(net[arc.head], -f);
  }
  return net;
}

}  // namespace

CutCertificate CertifyMaxFlow(const FlowNetwork& network,
                              const FlowAssignment& assignment, NodeId source,
                              NodeId sink) {
  network.Validate();
  CheckNode(network, source, "source");
  CheckNode(network, sink, "sink");
  const std::vector<FlowValue> net =
      CheckBoundsAndNetOutflow(network, assignment);
  for (int v = 0; v < network.node_count(); ++v) {
    if (v != source && v != sink && net[v] != 0) {
      throw Error(ErrorCode::kInfeasibleAssignment,
                  "flow not conserved at node " + std::to_string(v));
    }
  }

  std::vector<std::vector<NodeId>> residual(network.node_count());
  for (int a = 0; a < network.arc_count(); ++a) {
    const Arc& arc = network.arc(a);
    const FlowValue f = assignment.flow[a];
    if (f < network.ResolvedCapacity(a)) residual[arc.tail].push_back(arc.head);
    if (f > arc.lower) residual[arc.head].push_back(arc.tail);
  }
  std::vector<char> seen(network.node_count(), 0);
  std::queue<NodeId> queue;
  seen[source] = 1;
  queue.push(source);
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop();
    for (NodeId v : residual[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        queue.push(v);
      }
    }
  }

  CutCertificate cert;
  cert.optimal = source != sink && !seen[sink];
  if (source == sink) cert.optimal = true;
  for (int v = 0; v < network.node_count(); ++v) {
    if (seen[v]) cert.source_side.push_back(v);
  }
  return cert;
}

bool CertifyMinCostFlow(const FlowNetwork& network,
                        const FlowAssignment& assignment) {
  network.Validate();
  if (!assignment.potentials.has_value() ||
      static_cast<int>(assignment.potentials->size()) != network.node_count()) {
    throw Error(ErrorCode::kMissingPotentials,
                "assignment carries no node potentials");
  }
  const std::vector<FlowValue> net =
      CheckBoundsAndNetOutflow(network, assignment);
  for (int v = 0; v < network.node_count(); ++v) {
    if (net[v] != network.supply(v)) {
      throw Error(ErrorCode::kInfeasibleAssignment,
                  "net outflow at node " + std::to_string(v) + " is " +
                      std::to_string(net[v]) + ", supply is " +
                      std::to_string(network.supply(v)));
    }
  }
  const std::vector<CostValue>& pi = *assignment.potentials;
  for (int a = 0; a < network.arc_count(); ++a) {
    const Arc& arc = network.arc(a);
    const FlowValue f = assignment.flow[a];
    const CostValue reduced = arc.cost + pi[arc.tail] - pi[arc.head];
    if (f < network.ResolvedCapacity(a) && reduced < 0) return false;
    if (f > arc.lower && reduced > 0) return false;
  }
  return true;
}

}  // namespace covbal::netflow
