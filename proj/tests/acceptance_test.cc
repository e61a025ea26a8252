// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "covbal/balance.h"
#include "covbal/balance2.h"
#include "covbal/error.h"
#include "covbal/matchbal.h"
#include "covbal/netflow.h"
#include "covbal/oracle.h"
#include "covbal/random.h"
#include "json.hpp"
#include "test_support.h"

namespace covbal {
namespace {

using Clock = std::chrono::steady_clock;
using Json = nlohmann::ordered_json;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string first_failure;

  void Fail(const std::string& why) {
    if (pass) first_failure = why;
    pass = false;
  }
};

// Flow lies within [lower, capacity] on every arc and conserves supply.
bool FeasibleIntegralFlow(const netflow::FlowNetwork& net,
                          const netflow::FlowAssignment& a) {
  if (a.flow.size() != static_cast<std::size_t>(net.arc_count())) return false;
  std::vector<int64_t> balance(net.node_count(), 0);
  for (int id = 0; id < net.arc_count(); ++id) {
    const netflow::Arc& arc = net.arc(id);
    const int64_t cap = net.ResolvedCapacity(id);
    if (a.flow[id] < arc.lower || a.flow[id] > cap) return false;
    balance[arc.tail] += a.flow[id];
    balance[arc.head] -= a.flow[id];
  }
  for (int v = 0; v < net.node_count(); ++v) {
    if (balance[v] != net.supply(v)) return false;
  }
  return true;
}

struct SmallInstance {
  Dataset data;
  int64_t q = 0;
};

// Criterion-1 instance set: 500 datasets with P = 2, n <= 6, n' <= 12,
// k1, k2 <= 4, each solved at q in {n-1, n, n+1} clamped to [0, n'].
std::vector<SmallInstance> CriterionOneInstances() {
  Rng rng(20240601);
  std::vector<SmallInstance> out;
  for (int k = 0; k < 500; ++k) {
    const int64_t n = 1 + static_cast<int64_t>(rng.UniformBelow(6));
    const int64_t nc = 2 + static_cast<int64_t>(rng.UniformBelow(11));
    const int k1 = 1 + static_cast<int>(rng.UniformBelow(4));
    const int k2 = 1 + static_cast<int>(rng.UniformBelow(4));
    const Dataset d = oracle::RandomInstance(2, n, nc, {k1, k2}, rng.Next());
    std::set<int64_t> qs;
    for (int64_t q : {n, n - 1, n + 1}) qs.insert(std::clamp<int64_t>(q, 0, nc));
    for (int64_t q : qs) out.push_back({d, q});
  }
  return out;
}

Outcome Criterion1(const std::vector<SmallInstance>& set) {
  Outcome o;
  const auto start = Clock::now();
  int mismatches = 0;
  for (const SmallInstance& inst : set) {
    const int64_t exact = oracle::ExactMinImbalance(inst.data, inst.q).objective;
    const int64_t mcnf = balance2::SolveMcnf2(inst.data, inst.q).objective;
    const int64_t maxflow = balance2::SolveMaxFlow2(inst.data, inst.q).objective;
    if (exact != mcnf || exact != maxflow) {
      ++mismatches;
      o.Fail("q=" + std::to_string(inst.q) + " oracle " + std::to_string(exact) +
             " mcnf " + std::to_string(mcnf) + " maxflow " + std::to_string(maxflow));
    }
  }
  const double secs = Seconds(start);
  if (secs >= 60.0) o.Fail("runtime " + std::to_string(secs) + " s");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu instances, %d mismatches, %.2f s (limit 60 s)",
                set.size(), mismatches, secs);
  o.detail = buf;
  return o;
}

// Expected optimum at q = n from f*, |S+| and the lbar sums.
std::string CheckClosedForm(const Dataset& d, const balance2::Solve2Result& r) {
  const int64_t n = d.n();
  const int64_t f = *r.f_star;
  const int64_t s_plus = *r.s_plus_size;
  const int64_t l1 = *r.lbar1;
  const int64_t l2 = *r.lbar2;
  if (s_plus == 0) {
    if (r.objective != 2 * (n - f)) {
      return "s+=0: objective " + std::to_string(r.objective) + " vs 2(n-f*) " +
             std::to_string(2 * (n - f));
    }
    return "";
  }
  if (r.objective != 4 * n - 2 * l1 - 2 * l2) {
    return "s+>0: objective " + std::to_string(r.objective) +
           " vs 4n-2l1-2l2 " + std::to_string(4 * n - 2 * l1 - 2 * l2);
  }
  if (s_plus != n - (l1 + l2 - f)) {
    return "|S+| " + std::to_string(s_plus) + " vs " + std::to_string(n - (l1 + l2 - f));
  }
  return "";
}

// lbar sums computed from labels, independent of the solver.
std::pair<int64_t, int64_t> LbarSums(const Dataset& d) {
  int64_t sums[2] = {0, 0};
  for (int p = 0; p < 2; ++p) {
    std::map<std::string, std::pair<int64_t, int64_t>> counts;
    for (const Sample& s : d.treatment) ++counts[s.labels[p]].first;
    for (const Sample& s : d.control) ++counts[s.labels[p]].second;
    for (const auto& [label, c] : counts) sums[p] += std::min(c.first, c.second);
  }
  return {sums[0], sums[1]};
}

Outcome Criterion2(const std::vector<SmallInstance>& set) {
  Outcome o;
  int checked = 0;
  int padded = 0;
  for (const SmallInstance& inst : set) {
    if (inst.q != inst.data.n()) continue;
    const balance2::Solve2Result r = balance2::SolveMaxFlow2(inst.data, inst.q);
    const auto [l1, l2] = LbarSums(inst.data);
    if (*r.lbar1 != l1 || *r.lbar2 != l2) o.Fail("lbar sums disagree with labels");
    const std::string why = CheckClosedForm(inst.data, r);
    if (!why.empty()) o.Fail(why);
    ++checked;
    padded += *r.s_plus_size > 0;
  }
  if (checked == 0 || padded == 0 || padded == checked) {
    o.Fail("instance set does not exercise both cases");
  }
  o.detail = std::to_string(checked) + " instances at q = n (" +
             std::to_string(padded) + " with padding)";
  return o;
}

Outcome Criterion3() {
  Outcome o;
  Rng rng(33);
  int count = 0;
  while (count < 300) {
    const int64_t n = 1 + static_cast<int64_t>(rng.UniformBelow(8));
    const int64_t nc = n + static_cast<int64_t>(rng.UniformBelow(10));
    const int k1 = 1 + static_cast<int>(rng.UniformBelow(4));
    const int k2 = 1 + static_cast<int>(rng.UniformBelow(4));
    const Dataset d = oracle::RandomInstance(2, n, nc, {k1, k2}, rng.Next());
    const LevelIndex index = IndexLevels(d);
    std::vector<std::string> ids;
    for (const Sample& s : d.control) ids.push_back(s.id);
    rng.Shuffle(std::span(ids));
    ids.resize(n);
    const Selection sel = SelectionFromIds(d, index, ids);
    const int64_t im = Imbalance(index, sel).total;
    const balance2::ThreeTypeSizes t = balance2::Classify3Type(index, sel);
    if (t.s1 + t.s2 + t.s3 != n) o.Fail("type sizes do not sum to n");
    if (im != 4 * n - 2 * t.s2 - 4 * t.s3) {
      o.Fail("IM " + std::to_string(im) + " vs 4n-2s2-4s3 " +
             std::to_string(4 * n - 2 * t.s2 - 4 * t.s3));
    }
    ++count;
  }
  o.detail = std::to_string(count) + " random size-n selections";
  return o;
}

// Integrality and certificates on the criterion-1 networks, plus perturbed
// flows that must be rejected.
std::pair<Outcome, Outcome> Criteria4And7(const std::vector<SmallInstance>& set) {
  Outcome integral;
  Outcome cert;
  int networks = 0;
  int perturbed = 0;
  int rejected = 0;
  for (const SmallInstance& inst : set) {
    const LevelIndex index = IndexLevels(inst.data);
    const IntersectionCounts counts = CountIntersections(inst.data, index);
    const balance2::McnfGraph mg = balance2::BuildMcnfGraph(index, counts, inst.q);
    const netflow::FlowAssignment mf = netflow::SolveMinCostFlow(mg.network);
    if (!FeasibleIntegralFlow(mg.network, mf)) integral.Fail("mcnf flow infeasible");
    if (!netflow::CertifyMinCostFlow(mg.network, mf)) cert.Fail("mcnf certificate");
    const balance2::MaxFlowGraph xg = balance2::BuildMaxFlowGraph(index, counts);
    const netflow::FlowAssignment xf =
        netflow::SolveMaxFlow(xg.network, xg.source, xg.sink);
    if (!netflow::CertifyMaxFlow(xg.network, xf, xg.source, xg.sink).optimal) {
      cert.Fail("maxflow certificate");
    }
    for (const bool ok : {balance2::SolveMcnf2(inst.data, inst.q).certified,
                          balance2::SolveMaxFlow2(inst.data, inst.q).certified}) {
      if (!ok) cert.Fail("solver reported an uncertified flow");
    }
    ++networks;

    // Cost-2 cycle hub1 -> (1,0) -> hub1 keeps the flow feasible.
    netflow::FlowAssignment cyc = mf;
    int excess = -1;
    int deficit = -1;
    for (int a = 0; a < static_cast<int>(mg.legend.size()); ++a) {
      const balance2::ArcMeaning& m = mg.legend[a];
      if (m.covariate == 0 && m.level == 0) {
        (m.role == balance2::ArcRole::kExcess ? excess : deficit) = a;
      }
    }
    if (excess >= 0 && deficit >= 0 &&
        cyc.flow[excess] < mg.network.ResolvedCapacity(excess) &&
        cyc.flow[deficit] < mg.network.ResolvedCapacity(deficit)) {
      ++cyc.flow[excess];
      ++cyc.flow[deficit];
      cyc.objective += 2;
      ++perturbed;
      if (!FeasibleIntegralFlow(mg.network, cyc)) cert.Fail("perturbation broke feasibility");
      if (netflow::CertifyMinCostFlow(mg.network, cyc)) {
        cert.Fail("perturbed mcnf flow certified");
      } else {
        ++rejected;
      }
    }

    // Cancel one unit along s -> (1,i) -> (2,j) -> t.
    if (xf.objective > 0) {
      netflow::FlowAssignment cut = xf;
      bool done = false;
      for (int a = 0; a < xg.network.arc_count() && !done; ++a) {
        const netflow::Arc& arc = xg.network.arc(a);
        if (xg.legend[a].role != balance2::ArcRole::kCell || cut.flow[a] == 0) continue;
        for (int b = 0; b < xg.network.arc_count(); ++b) {
          const netflow::Arc& other = xg.network.arc(b);
          if (other.tail == xg.source && other.head == arc.tail) --cut.flow[b];
          if (other.head == xg.sink && other.tail == arc.head) --cut.flow[b];
        }
        --cut.flow[a];
        --cut.objective;
        done = true;
      }
      ++perturbed;
      if (netflow::CertifyMaxFlow(xg.network, cut, xg.source, xg.sink).optimal) {
        cert.Fail("reduced max flow certified");
      } else {
        ++rejected;
      }
    }
  }
  integral.detail = std::to_string(networks) + " MCNF flows integral and feasible";
  cert.detail = std::to_string(2 * networks) + " solver flows certified, " +
                std::to_string(rejected) + "/" + std::to_string(perturbed) +
                " perturbed flows rejected";
  if (perturbed == 0) cert.Fail("no perturbation applied");
  return {integral, cert};
}

Outcome Criterion5() {
  Outcome o;
  Rng rng(55);
  int count = 0;
  for (int k = 0; k < 120; ++k) {
    const int64_t kappa = 1 + static_cast<int64_t>(k % 2);
    const int64_t n = 1 + static_cast<int64_t>(rng.UniformBelow(kappa == 1 ? 4 : 3));
    const int64_t nc = kappa * n + static_cast<int64_t>(rng.UniformBelow(4));
    const int P = 2 + static_cast<int>(rng.UniformBelow(2));
    const Dataset d = oracle::RandomInstance(P, n, nc, std::vector<int>(P, 2), rng.Next());
    const Dataset expanded = KappaExpand(d, kappa);
    const int64_t via_oracle =
        oracle::ExactMinImbalance(expanded, kappa * n).objective;
    const int64_t direct = testing::SubsetMinImbalance(d, kappa * n, kappa);
    if (via_oracle != direct) {
      o.Fail("kappa " + std::to_string(kappa) + ": oracle " +
             std::to_string(via_oracle) + " vs brute " + std::to_string(direct));
    }
    ++count;
  }
  o.detail = std::to_string(count) + " instances, kappa in {1,2}";
  return o;
}

// No triple uses value x_size in coordinate `coord`, so that value of that
// coordinate is never covered.
oracle::ThreeDMInstance UncoveredValue(Rng& rng, int x_size, int coord, int m) {
  oracle::ThreeDMInstance inst;
  inst.x_size = x_size;
  std::set<oracle::Triple> used;
  while (static_cast<int>(inst.triples.size()) < m) {
    oracle::Triple t;
    for (int c = 0; c < 3; ++c) {
      const int top = c == coord ? x_size - 1 : x_size;
      t[c] = 1 + static_cast<int>(rng.UniformBelow(top));
    }
    if (used.insert(t).second) inst.triples.push_back(t);
  }
  return inst;
}

Outcome Criterion6() {
  Outcome o;
  Rng rng(66);
  int planted = 0;
  for (int k = 0; k < 60; ++k) {
    const int x = 2 + k % 3;
    const int m = x + static_cast<int>(rng.UniformBelow(9 - x));
    const oracle::ThreeDMInstance inst = oracle::RandomPlanted3dm(x, m, rng.Next());
    const int64_t best = oracle::ExactMinImbalance(oracle::Gen3dmDataset(inst), x).objective;
    if (best != 0) o.Fail("planted instance gave " + std::to_string(best));
    ++planted;
  }

  std::vector<oracle::ThreeDMInstance> matchless;
  auto literal = [](int x, std::vector<oracle::Triple> t) {
    oracle::ThreeDMInstance inst;
    inst.x_size = x;
    inst.triples = std::move(t);
    return inst;
  };
  matchless.push_back(literal(2, {{1, 1, 1}, {1, 2, 2}}));
  matchless.push_back(literal(2, {{1, 1, 1}, {2, 1, 2}, {2, 2, 1}}));
  matchless.push_back(literal(3, {{1, 1, 1}, {2, 2, 2}, {3, 3, 1}, {3, 1, 3}}));
  matchless.push_back(literal(3, {{1, 2, 3}, {2, 3, 1}, {3, 1, 1}, {1, 1, 2}}));
  for (int k = 0; static_cast<int>(matchless.size()) < 24; ++k) {
    const int x = 2 + k % 3;
    const int m = x + static_cast<int>(rng.UniformBelow(9 - x));
    matchless.push_back(UncoveredValue(rng, x, k % 3, std::min(m, x * x * (x - 1))));
  }
  int checked = 0;
  for (const oracle::ThreeDMInstance& inst : matchless) {
    if (oracle::HasPerfectMatching(inst)) {
      o.Fail("constructed instance has a perfect matching");
      continue;
    }
    const int64_t best =
        oracle::ExactMinImbalance(oracle::Gen3dmDataset(inst), inst.x_size).objective;
    if (best <= 0) o.Fail("matchless instance gave 0");
    ++checked;
  }
  o.detail = std::to_string(planted) + " planted at 0, " + std::to_string(checked) +
             " matchless above 0";
  return o;
}

Outcome Criterion8() {
  Outcome o;
  const Dataset d = oracle::RandomInstance(2, 10000, 100000, {100, 100}, 8);
  auto start = Clock::now();
  const balance2::Solve2Result mf = balance2::SolveMaxFlow2(d, d.n());
  const double maxflow_secs = Seconds(start);
  start = Clock::now();
  const balance2::Solve2Result mc = balance2::SolveMcnf2(d, d.n());
  const double mcnf_secs = Seconds(start);
  if (maxflow_secs >= 10.0) o.Fail("maxflow took " + std::to_string(maxflow_secs) + " s");
  if (mcnf_secs >= 120.0) o.Fail("mcnf took " + std::to_string(mcnf_secs) + " s");
  const std::string why = CheckClosedForm(d, mf);
  if (!why.empty()) o.Fail(why);
  if (mf.objective != mc.objective) o.Fail("routes disagree");
  if (!mf.certified || !mc.certified) o.Fail("uncertified flow");
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "objective %lld (f* %lld, |S+| %lld); maxflow %.2f s (limit 10), "
                "mcnf %.2f s (limit 120)",
                static_cast<long long>(mf.objective),
                static_cast<long long>(*mf.f_star),
                static_cast<long long>(*mf.s_plus_size), maxflow_secs, mcnf_secs);
  o.detail = buf;
  return o;
}

Outcome Criterion9() {
  Outcome o;
  Rng rng(99);
  int count = 0;
  for (int k = 0; k < 120; ++k) {
    const int64_t kappa = 1 + static_cast<int64_t>(k % 2);
    const int64_t n = 1 + static_cast<int64_t>(rng.UniformBelow(6 / kappa));
    const int64_t nc = kappa * n + static_cast<int64_t>(rng.UniformBelow(3));
    const Dataset d = oracle::RandomInstance(2, n, nc, {2, 2}, rng.Next());
    const oracle::OracleResult stage1 =
        oracle::ExactMinImbalance(KappaExpand(d, kappa), kappa * n);
    matchbal::DistanceMatrix m;
    for (const Sample& s : d.treatment) m.treatment_ids.push_back(s.id);
    for (const Sample& s : d.control) m.control_ids.push_back(s.id);
    for (int64_t c = 0; c < n * nc; ++c) {
      m.values.push_back(static_cast<int64_t>(rng.UniformBelow(50)));
    }
    const matchbal::Assignment a = matchbal::AssignControls(d, stage1.argmin, kappa, m);
    const int64_t brute = testing::BruteAssignmentCost(d, IndexLevels(d),
                                                       stage1.argmin.counts, kappa, m);
    if (a.total_cost != brute) {
      o.Fail("cost " + std::to_string(a.total_cost) + " vs brute " + std::to_string(brute));
    }
    ++count;
  }
  o.detail = std::to_string(count) + " instances with n*kappa <= 6";
  return o;
}

Outcome Criterion10() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "covbal_acceptance";
  fs::create_directories(dir);
  int fixtures = 0;
  for (const char* name : {"instance_a.csv", "instance_b.csv", "instance_c.csv"}) {
    for (const cli::SolveMethod method :
         {cli::SolveMethod::kMcnf, cli::SolveMethod::kMaxFlow}) {
      cli::RunConfig c;
      c.command = cli::Command::kSolve;
      c.input = std::string(COVBAL_FIXTURE_DIR) + "/" + name;
      c.covariates = {"c1", "c2"};
      c.method = method;
      c.seed = 5;
      const cli::RunResult first = cli::Run(c);
      const cli::RunResult second = cli::Run(c);
      if (first.exit_code != 0) o.Fail(std::string(name) + ": " + first.payload);
      if (first.payload != second.payload) o.Fail(std::string(name) + ": output differs");

      const fs::path report = dir / "report.json";
      std::ofstream(report, std::ios::binary) << first.payload;
      cli::RunConfig v = c;
      v.command = cli::Command::kVerify;
      v.selection = report.string();
      const cli::RunResult checked = cli::Run(v);
      if (checked.exit_code != 0 || !Json::parse(checked.payload)["optimal"].get<bool>()) {
        o.Fail(std::string(name) + ": verify rejected " + checked.payload);
      }
    }
    ++fixtures;
  }
  fs::remove_all(dir);
  o.detail = std::to_string(fixtures) + " fixtures, two methods, byte-stable and verified";
  return o;
}

int RunAll() {
  const std::vector<SmallInstance> set = CriterionOneInstances();
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
  std::pair<Outcome, Outcome> four_seven;
  criteria.emplace_back("oracle equivalence", [&] { return Criterion1(set); });
  criteria.emplace_back("closed-form optima", [&] { return Criterion2(set); });
  criteria.emplace_back("3-type identity", [] { return Criterion3(); });
  criteria.emplace_back("integrality", [&] {
    four_seven = Criteria4And7(set);
    return four_seven.first;
  });
  criteria.emplace_back("kappa reduction", [] { return Criterion5(); });
  criteria.emplace_back("3DM generator", [] { return Criterion6(); });
  criteria.emplace_back("flow certificates", [&] { return four_seven.second; });
  criteria.emplace_back("scale smoke test", [] { return Criterion8(); });
  criteria.emplace_back("MB stage 2", [] { return Criterion9(); });
  criteria.emplace_back("CLI round-trip", [] { return Criterion10(); });

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.Fail(std::string("exception: ") + e.what());
    }
    std::printf("[%s] criterion %zu %s: %s%s%s\n", o.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), o.detail.c_str(),
                o.pass ? "" : "; first failure: ", o.first_failure.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace covbal

int main() { return covbal::RunAll(); }
