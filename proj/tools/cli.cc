#include "cli.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "covbal/balance2.h"
#include "covbal/error.h"
#include "covbal/netflow.h"
#include "covbal/oracle.h"
#include "covbal/random.h"
#include "json.hpp"

namespace covbal::cli {

using Json = nlohmann::ordered_json;

namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitRow(std::string_view line, int row) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::string_view field = Trim(line.substr(
        start, comma == std::string_view::npos ? line.npos : comma - start));
    if (field.find('"') != std::string_view::npos) {
      throw Error(ErrorCode::kParseError,
                  "row " + std::to_string(row) + ": quoted fields are not supported");
    }
    fields.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Non-blank lines with their 1-based line numbers.
std::vector<std::pair<int, std::string_view>> Lines(std::string_view text) {
  std::vector<std::pair<int, std::string_view>> lines;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string_view line =
        text.substr(start, end == text.npos ? text.npos : end - start);
    ++number;
    if (!Trim(line).empty()) lines.emplace_back(number, line);
    if (end == text.npos) break;
    start = end + 1;
  }
  return lines;
}

}  // namespace

Dataset ParseDatasetCsv(std::string_view text,
                        const std::vector<std::string>& covariates) {
  if (covariates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no covariate columns named");
  }
  const auto lines = Lines(text);
  if (lines.empty()) throw Error(ErrorCode::kParseError, "empty CSV");
  const std::vector<std::string> header =
      SplitRow(lines[0].second, lines[0].first);
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::kMissingColumn,
                  "row " + std::to_string(lines[0].first) +
                      ": header has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = column("id");
  const std::size_t group_col = column("group");
  std::vector<std::size_t> cov_cols;
  for (const std::string& c : covariates) cov_cols.push_back(column(c));

  Dataset d;
  d.covariate_count = static_cast<int>(covariates.size());
  d.covariate_names = covariates;
  std::unordered_set<std::string> treatment_ids, control_ids;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [row, line] = lines[k];
    std::vector<std::string> fields = SplitRow(line, row);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kParseError,
                  "row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    Sample s;
    s.id = fields[id_col];
    if (s.id.empty()) {
      throw Error(ErrorCode::kParseError,
                  "row " + std::to_string(row) + ": empty id");
    }
    for (std::size_t c : cov_cols) s.labels.push_back(fields[c]);
    const std::string& group = fields[group_col];
    std::unordered_set<std::string>* ids = nullptr;
    std::vector<Sample>* target = nullptr;
    if (group == "treatment") {
      ids = &treatment_ids;
      target = &d.treatment;
    } else if (group == "control") {
      ids = &control_ids;
      target = &d.control;
    } else {
      throw Error(ErrorCode::kBadGroupValue,
                  "row " + std::to_string(row) + ": group '" + group +
                      "' is neither 'treatment' nor 'control'");
    }
    if (!ids->insert(s.id).second) {
      throw Error(ErrorCode::kDuplicateId, "row " + std::to_string(row) +
                                               ": duplicate " + group +
                                               " id '" + s.id + "'");
    }
    target->push_back(std::move(s));
  }
  if (d.treatment.empty()) {
    throw Error(ErrorCode::kEmptyTreatment,
                "row " + std::to_string(lines.back().first) +
                    ": input has no treatment rows");
  }
  return d;
}

Dataset IngestCsv(const std::string& path,
                  const std::vector<std::string>& covariates) {
  return ParseDatasetCsv(ReadFile(path), covariates);
}

void WriteDatasetCsv(const Dataset& dataset, std::ostream& out) {
  out << "id,group";
  for (int p = 0; p < dataset.covariate_count; ++p) {
    out << ","
        << (dataset.covariate_names.empty() ? "x" + std::to_string(p + 1)
                                            : dataset.covariate_names[p]);
  }
  out << "\n";
  auto write = [&](const std::vector<Sample>& group, const char* name) {
    for (const Sample& s : group) {
      out << s.id << "," << name;
      for (const std::string& label : s.labels) out << "," << label;
      out << "\n";
    }
  };
  write(dataset.treatment, "treatment");
  write(dataset.control, "control");
}

int64_t ParseFixedPoint(std::string_view text) {
  const std::string_view s = Trim(text);
  auto bad = [&] {
    return Error(ErrorCode::kParseError,
                 "'" + std::string(text) + "' is not a nonnegative decimal");
  };
  const std::size_t dot = s.find('.');
  const std::string_view whole = s.substr(0, dot);
  const std::string_view frac =
      dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw bad();
  auto digits = [](std::string_view v) {
    return std::all_of(v.begin(), v.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!digits(whole) || !digits(frac)) throw bad();

  int64_t value = 0;
  if (!whole.empty()) {
    auto [ptr, ec] = std::from_chars(whole.data(), whole.data() + whole.size(),
                                     value);
    if (ec != std::errc() || value > INT64_MAX / kDistanceScale - 1) throw bad();
  }
  int64_t fraction = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    fraction = fraction * 10 + (k < frac.size() ? frac[k] - '0' : 0);
  }
  if (frac.size() > 3 && frac[3] >= '5') ++fraction;
  return value * kDistanceScale + fraction;
}

matchbal::DistanceMatrix ParseDistanceCsv(std::string_view text) {
  const auto lines = Lines(text);
  if (lines.empty()) throw Error(ErrorCode::kParseError, "empty distance CSV");
  matchbal::DistanceMatrix m;
  std::vector<std::string> header = SplitRow(lines[0].second, lines[0].first);
  m.control_ids.assign(header.begin() + 1, header.end());
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [row, line] = lines[k];
    std::vector<std::string> fields = SplitRow(line, row);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kParseError,
                  "distance row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    m.treatment_ids.push_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      try {
        m.values.push_back(ParseFixedPoint(fields[c]));
      } catch (const Error& e) {
        throw Error(ErrorCode::kParseError,
                    "distance row " + std::to_string(row) + ": " + e.what());
      }
    }
  }
  return m;
}

matchbal::DistanceMatrix ReadDistanceCsv(const std::string& path) {
  return ParseDistanceCsv(ReadFile(path));
}

namespace {

std::shared_ptr<spdlog::logger> Logger() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("covbal");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("COVBAL_LOG");
    const std::string level = env ? env : "error";
    if (level == "debug") {
      l->set_level(spdlog::level::debug);
    } else if (level == "info") {
      l->set_level(spdlog::level::info);
    } else {
      l->set_level(spdlog::level::err);
    }
    return l;
  }();
  return logger;
}

const char* MethodName(SolveMethod m) {
  switch (m) {
    case SolveMethod::kMcnf: return "mcnf";
    case SolveMethod::kMaxFlow: return "maxflow";
    case SolveMethod::kOracle: return "oracle";
  }
  return "?";
}

Json LevelTable(const Dataset& dataset, const LevelIndex& index,
                const ImbalanceReport& report) {
  Json levels = Json::array();
  for (int p = 0; p < index.covariate_count(); ++p) {
    const std::string name = dataset.covariate_names.empty()
                                 ? "x" + std::to_string(p + 1)
                                 : dataset.covariate_names[p];
    for (int i = 0; i < index.level_count(p); ++i) {
      levels.push_back(Json{{"covariate", name},
                            {"level", index.label(p, i)},
                            {"ell", index.ell(p, i)},
                            {"selected", report.selected[p][i]},
                            {"excess", report.excess[p][i]},
                            {"deficit", report.deficit[p][i]}});
    }
  }
  return levels;
}

Dataset LoadInput(const RunConfig& config) {
  if (config.input.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--input is required");
  }
  Dataset d = IngestCsv(config.input, config.covariates);
  Logger()->info("read {} treatment and {} control samples from {}", d.n(),
                 d.n_control(), config.input);
  return d;
}

Json ReadReport(const std::string& path) {
  if (path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--selection is required");
  }
  try {
    return Json::parse(ReadFile(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError,
                "selection report '" + path + "': " + e.what());
  }
}

template <typename T>
T ReportField(const Json& report, const char* key) {
  if (!report.contains(key)) {
    throw Error(ErrorCode::kParseError,
                std::string("selection report lacks '") + key + "'");
  }
  try {
    return report.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("selection report field '") + key + "': " + e.what());
  }
}

Json RunSolve(const RunConfig& config, SolveMethod method) {
  const Dataset original = LoadInput(config);
  const Dataset data = KappaExpand(original, config.kappa);
  const LevelIndex index = IndexLevels(data);
  const IntersectionCounts counts = CountIntersections(data, index);
  const int64_t q = config.q.value_or(data.n());

  Selection selection;
  Json f_star = nullptr;
  Json s_plus = nullptr;
  std::optional<int64_t> unique_count;
  int64_t objective = 0;
  Logger()->info("solving with {} for q={} kappa={}", MethodName(method), q,
                 config.kappa);
  if (method == SolveMethod::kOracle) {
    const oracle::OracleResult r = oracle::ExactMinImbalance(index, counts, q);
    selection = r.argmin;
    objective = r.objective;
    unique_count = r.optimal_count;
  } else {
    const balance2::Solve2Result r = balance2::Solve2(
        data, q,
        method == SolveMethod::kMcnf ? balance2::Method::kMinCostFlow
                                     : balance2::Method::kMaxFlow);
    if (!r.certified) {
      throw Error(ErrorCode::kCertificateFailure,
                  "flow solution failed its optimality certificate");
    }
    selection = r.selection;
    objective = r.objective;
    if (r.f_star) f_star = *r.f_star;
    if (r.s_plus_size) s_plus = *r.s_plus_size;
  }

  std::vector<std::string> ids = Materialize(data, index, selection, config.seed);
  // Re-derive the objective from the materialized ids.
  const ImbalanceReport report =
      Imbalance(index, counts, SelectionFromIds(data, index, ids));
  if (report.total != objective ||
      static_cast<int64_t>(ids.size()) != q) {
    throw Error(ErrorCode::kCertificateFailure,
                "selected ids do not reproduce the solver objective");
  }

  Json out;
  out["method"] = MethodName(method);
  out["q"] = q;
  out["kappa"] = config.kappa;
  out["objective"] = objective;
  out["f_star"] = f_star;
  out["s_plus"] = s_plus;
  out["levels"] = LevelTable(data, index, report);
  out["selected_ids"] = ids;
  if (unique_count) out["unique_count"] = *unique_count;
  return out;
}

Json RunVerify(const RunConfig& config) {
  const Dataset original = LoadInput(config);
  const Json report = ReadReport(config.selection);
  const int64_t kappa = report.contains("kappa")
                            ? ReportField<int64_t>(report, "kappa")
                            : config.kappa;
  const Dataset data = KappaExpand(original, kappa);
  const LevelIndex index = IndexLevels(data);
  const IntersectionCounts counts = CountIntersections(data, index);
  const int64_t q = ReportField<int64_t>(report, "q");
  const auto ids = ReportField<std::vector<std::string>>(report, "selected_ids");
  if (static_cast<int64_t>(ids.size()) != q) {
    throw Error(ErrorCode::kWrongSelectionSize,
                "report lists " + std::to_string(ids.size()) +
                    " ids but q = " + std::to_string(q));
  }
  const ImbalanceReport im =
      Imbalance(index, counts, SelectionFromIds(data, index, ids));
  const int64_t reported = ReportField<int64_t>(report, "objective");
  if (im.total != reported) {
    throw Error(ErrorCode::kObjectiveMismatch,
                "recomputed imbalance " + std::to_string(im.total) +
                    " differs from reported " + std::to_string(reported));
  }

  Json out;
  out["q"] = q;
  out["kappa"] = kappa;
  out["objective"] = im.total;
  Json optimum = nullptr;
  Json certificates = Json::object();
  if (index.covariate_count() == 2) {
    const balance2::McnfGraph mg = balance2::BuildMcnfGraph(index, counts, q);
    const netflow::FlowAssignment mf = netflow::SolveMinCostFlow(mg.network);
    const bool mcnf_ok = netflow::CertifyMinCostFlow(mg.network, mf);
    const balance2::MaxFlowGraph xg = balance2::BuildMaxFlowGraph(index, counts);
    const netflow::FlowAssignment xf =
        netflow::SolveMaxFlow(xg.network, xg.source, xg.sink);
    const bool maxflow_ok =
        netflow::CertifyMaxFlow(xg.network, xf, xg.source, xg.sink).optimal;
    certificates["mcnf"] = mcnf_ok;
    certificates["maxflow"] = maxflow_ok;
    if (!mcnf_ok || !maxflow_ok) {
      throw Error(ErrorCode::kCertificateFailure,
                  "flow certificate rejected a solver output");
    }
    optimum = mf.objective;
  } else if (static_cast<int>(counts.cells.size()) <= oracle::kMaxCells &&
             counts.Total() <= oracle::kMaxControls) {
    optimum = oracle::ExactMinImbalance(index, counts, q).objective;
  }
  out["optimal_objective"] = optimum;
  out["optimal"] = optimum.is_null() ? Json(nullptr)
                                     : Json(optimum.get<int64_t>() == im.total);
  out["certificates"] = certificates;
  return out;
}

Json RunMatch(const RunConfig& config) {
  const Dataset data = LoadInput(config);
  const Json report = ReadReport(config.selection);
  const int64_t kappa = report.contains("kappa")
                            ? ReportField<int64_t>(report, "kappa")
                            : config.kappa;
  if (config.distances.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--distances is required");
  }
  const LevelIndex index = IndexLevels(data);
  const auto ids = ReportField<std::vector<std::string>>(report, "selected_ids");
  const Selection sizes = SelectionFromIds(data, index, ids);
  const matchbal::DistanceMatrix distances = ReadDistanceCsv(config.distances);
  const matchbal::Assignment assignment =
      matchbal::AssignControls(data, sizes, kappa, distances);

  // Stage-1 uniqueness decides whether the assignment is MB-optimal.
  Json unique = nullptr;
  if (report.contains("unique_count")) {
    unique = ReportField<int64_t>(report, "unique_count");
  } else {
    const Dataset expanded = KappaExpand(data, kappa);
    const LevelIndex eindex = IndexLevels(expanded);
    const IntersectionCounts ecounts = CountIntersections(expanded, eindex);
    if (static_cast<int>(ecounts.cells.size()) <= oracle::kMaxCells &&
        ecounts.Total() <= oracle::kMaxControls) {
      unique = oracle::ExactMinImbalance(eindex, ecounts, kappa * data.n())
                   .optimal_count;
    }
  }
  const char* status = "unknown_stage1_uniqueness";
  if (unique.is_number()) {
    status = unique.get<int64_t>() == 1 ? "optimal" : "stage1_not_unique";
  }

  Json out;
  out["kappa"] = kappa;
  out["distance_scale"] = kDistanceScale;
  out["total_cost"] = assignment.total_cost;
  out["stage1_unique_count"] = unique;
  out["status"] = status;
  Json rows = Json::array();
  for (std::size_t t = 0; t < data.treatment.size(); ++t) {
    rows.push_back(Json{{"treatment", data.treatment[t].id},
                        {"controls", assignment.controls[t]}});
  }
  out["assignments"] = rows;
  return out;
}

std::string RunGen(const RunConfig& config) {
  Dataset d;
  if (config.kind == GenKind::kRandom) {
    std::vector<int> levels = config.levels;
    if (levels.empty()) levels.assign(config.covariate_count, 3);
    d = oracle::RandomInstance(config.covariate_count, config.n,
                               config.n_control, levels, config.seed);
  } else if (config.plant) {
    d = oracle::Gen3dmDataset(
        oracle::RandomPlanted3dm(config.x_size, config.triples, config.seed));
  } else {
    oracle::ThreeDMInstance inst;
    inst.x_size = config.x_size;
    Rng rng(config.seed);
    std::set<oracle::Triple> used;
    const int64_t possible =
        static_cast<int64_t>(config.x_size) * config.x_size * config.x_size;
    if (config.x_size < 1 || config.triples > possible) {
      throw Error(ErrorCode::kInvalidArgument, "bad 3dm parameters");
    }
    while (static_cast<int>(inst.triples.size()) < config.triples) {
      oracle::Triple t;
      for (int& v : t) v = 1 + static_cast<int>(rng.UniformBelow(config.x_size));
      if (used.insert(t).second) inst.triples.push_back(t);
    }
    d = oracle::Gen3dmDataset(inst);
  }
  std::ostringstream out;
  WriteDatasetCsv(d, out);
  return out.str();
}

Json ErrorJson(const Error& e) {
  return Json{{"error",
               {{"code", std::string(ErrorCodeName(e.code()))},
                {"message", e.what()}}}};
}

}  // namespace

RunResult Run(const RunConfig& config) {
  RunResult result;
  try {
    switch (config.command) {
      case Command::kSolve:
        result.payload = RunSolve(config, config.method).dump(2) + "\n";
        break;
      case Command::kOracle:
        result.payload =
            RunSolve(config, SolveMethod::kOracle).dump(2) + "\n";
        break;
      case Command::kVerify:
        result.payload = RunVerify(config).dump(2) + "\n";
        break;
      case Command::kMatch:
        result.payload = RunMatch(config).dump(2) + "\n";
        break;
      case Command::kGen:
        result.payload = RunGen(config);
        break;
    }
  } catch (const Error& e) {
    Logger()->error("{}: {}", ErrorCodeName(e.code()), e.what());
    result.exit_code = e.code() == ErrorCode::kCertificateFailure
                           ? kExitCertificateFailure
                           : kExitInputError;
    result.payload = ErrorJson(e).dump(2) + "\n";
  }
  return result;
}

int Main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimum-imbalance control selection"};
  app.require_subcommand(1);
  RunConfig config;
  std::string covariates;
  int64_t q = 0;
  std::vector<CLI::Option*> q_options;

  auto add_data_options = [&](CLI::App* sub) {
    sub->add_option("--input", config.input, "Input CSV")->required();
    sub->add_option("--covariates", covariates,
                    "Comma-separated covariate columns")
        ->required();
    sub->add_option("--output", config.output, "Output path (default stdout)");
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve min-imbalance selection");
  add_data_options(solve);
  q_options.push_back(
      solve->add_option("--q", q, "Selection size (default kappa*n)"));
  solve->add_option("--kappa", config.kappa, "Controls per treatment sample");
  solve->add_option("--method", config.method, "mcnf | maxflow | oracle")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, SolveMethod>{{"mcnf", SolveMethod::kMcnf},
                                             {"maxflow", SolveMethod::kMaxFlow},
                                             {"oracle", SolveMethod::kOracle}}));
  solve->add_option("--seed", config.seed, "Seed for picking ids within cells");

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "Exhaustive optimum of a tiny instance");
  add_data_options(oracle_cmd);
  q_options.push_back(
      oracle_cmd->add_option("--q", q, "Selection size (default kappa*n)"));
  oracle_cmd->add_option("--kappa", config.kappa, "Controls per treatment sample");
  oracle_cmd->add_option("--seed", config.seed, "Seed for picking ids");

  CLI::App* verify = app.add_subcommand(
      "verify", "Recompute a report's imbalance and check flow certificates");
  add_data_options(verify);
  verify->add_option("--selection", config.selection, "solve report (JSON)")
      ->required();

  CLI::App* match = app.add_subcommand(
      "match", "Assign stage-1 controls to treatment samples by distance");
  add_data_options(match);
  match->add_option("--selection", config.selection, "solve report (JSON)")
      ->required();
  match->add_option("--distances", config.distances, "Distance CSV")->required();
  match->add_option("--kappa", config.kappa,
                    "Controls per treatment sample (default from report)");

  CLI::App* gen = app.add_subcommand("gen", "Generate an instance CSV");
  gen->add_option("--kind", config.kind, "random | 3dm")
      ->transform(CLI::CheckedTransformer(std::map<std::string, GenKind>{
          {"random", GenKind::kRandom}, {"3dm", GenKind::k3dm}}));
  gen->add_option("--seed", config.seed, "Generator seed");
  gen->add_option("--output", config.output, "Output path (default stdout)");
  gen->add_option("--P", config.covariate_count, "Covariates (random)");
  gen->add_option("--n", config.n, "Treatment samples (random)");
  gen->add_option("--n-control", config.n_control, "Control samples (random)");
  gen->add_option("--levels", config.levels, "Levels per covariate (random)")
      ->delimiter(',');
  gen->add_option("--x-size", config.x_size, "|X| (3dm)");
  gen->add_option("--triples", config.triples, "|U| (3dm)");
  gen->add_flag("!--no-plant", config.plant,
                "Draw U without planting a perfect matching (3dm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  if (*solve) config.command = Command::kSolve;
  if (*oracle_cmd) config.command = Command::kOracle;
  if (*verify) config.command = Command::kVerify;
  if (*match) config.command = Command::kMatch;
  if (*gen) config.command = Command::kGen;
  for (CLI::Option* opt : q_options) {
    if (opt->count() > 0) config.q = q;
  }
  std::stringstream cov(covariates);
  for (std::string c; std::getline(cov, c, ',');) {
    config.covariates.emplace_back(Trim(c));
  }

  const RunResult result = Run(config);
  if (result.exit_code != kExitOk) {
    err << "covbal: " << result.payload;
  }
  if (config.output.empty()) {
    out << result.payload;
  } else {
    std::ofstream file(config.output, std::ios::binary);
    if (!file) {
      err << "covbal: cannot write '" << config.output << "'\n";
      return kExitInputError;
    }
    file << result.payload;
  }
  return result.exit_code;
}

}  // namespace covbal::cli
