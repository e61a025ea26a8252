#include "covbal/matchbal.h"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "covbal/error.h"
#include "covbal/netflow.h"

namespace covbal::matchbal {

namespace {

std::vector<std::size_t> Permutation(const std::vector<std::string>& header,
                                     const std::vector<Sample>& group,
                                     const char* what) {
  std::unordered_map<std::string_view, std::size_t> position;
  for (std::size_t k = 0; k < header.size(); ++k) position.emplace(header[k], k);
  std::vector<std::size_t> out;
  out.reserve(group.size());
  for (const Sample& s : group) {
    auto it = position.find(s.id);
    if (it == position.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("distance matrix has no ") + what + " '" + s.id +
                      "'");
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

Assignment AssignControls(const Dataset& dataset, const Selection& cell_sizes,
                          int64_t kappa, const DistanceMatrix& distances) {
  const LevelIndex index = IndexLevels(dataset);
  const IntersectionCounts population = CountIntersections(dataset, index);
  const int64_t n = dataset.n();
  if (kappa < 1) {
    throw Error(ErrorCode::kInvalidArgument, "kappa must be at least 1");
  }
  if (cell_sizes.Total() != kappa * n) {
    throw Error(ErrorCode::kInfeasibleSizes,
                "cell sizes sum to " + std::to_string(cell_sizes.Total()) +
                    ", need kappa*n = " + std::to_string(kappa * n));
  }
  for (const auto& [cell, s] : cell_sizes.counts) {
    if (s < 0 || s > population.Count(cell)) {
      throw Error(ErrorCode::kInfeasibleSizes,
                  "cell size " + std::to_string(s) + " exceeds population " +
                      std::to_string(population.Count(cell)));
    }
  }
  if (distances.values.size() !=
      distances.treatment_ids.size() * distances.control_ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "distance matrix is not dense");
  }
  if (std::any_of(distances.values.begin(), distances.values.end(),
                  [](int64_t d) { return d < 0; })) {
    throw Error(ErrorCode::kInvalidArgument, "negative distance");
  }
  const std::vector<std::size_t> row =
      Permutation(distances.treatment_ids, dataset.treatment, "treatment id");
  const std::vector<std::size_t> col =
      Permutation(distances.control_ids, dataset.control, "control id");

  // Nodes: treatment samples, then control samples, then one source per
  // cell with a positive size.
  netflow::FlowNetwork network(static_cast<int>(n + dataset.n_control()));
  for (int64_t t = 0; t < n; ++t) {
    network.SetSupply(static_cast<netflow::NodeId>(t), -kappa);
  }
  std::map<Cell, netflow::NodeId> source_of;
  for (const auto& [cell, s] : cell_sizes.counts) {
    if (s > 0) source_of[cell] = network.AddNode(s);
  }

  struct Link {
    std::size_t control;
    std::size_t treatment;
  };
  std::vector<Link> links;  // indexed by ArcId - link_base
  netflow::ArcId link_base = -1;
  std::vector<std::size_t> eligible;
  for (std::size_t c = 0; c < dataset.control.size(); ++c) {
    auto it = source_of.find(index.CellOf(dataset.control[c]));
    if (it == source_of.end()) continue;
    const auto control_node = static_cast<netflow::NodeId>(n + c);
    network.AddArc(it->second, control_node, 1, 0);
    eligible.push_back(c);
  }
  for (std::size_t c : eligible) {
    const auto control_node = static_cast<netflow::NodeId>(n + c);
    for (int64_t t = 0; t < n; ++t) {
      const netflow::ArcId a =
          network.AddArc(control_node, static_cast<netflow::NodeId>(t), 1,
                         distances.at(row[t], col[c]));
      if (link_base < 0) link_base = a;
      links.push_back({c, static_cast<std::size_t>(t)});
    }
  }

  netflow::FlowAssignment flow;
  try {
    flow = netflow::SolveMinCostFlow(network);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInfeasible) throw;
    throw Error(ErrorCode::kInfeasibleSizes,
                std::string("no assignment fits the cell sizes: ") + e.what());
  }

  Assignment out;
  out.controls.resize(n);
  out.total_cost = flow.objective;
  for (std::size_t k = 0; k < links.size(); ++k) {
    if (flow.flow[link_base + k] > 0) {
      out.controls[links[k].treatment].push_back(
          dataset.control[links[k].control].id);
    }
  }
  for (auto& ids : out.controls) std::sort(ids.begin(), ids.end());
  return out;
}

}  // namespace covbal::matchbal
