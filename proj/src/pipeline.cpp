#include "pcd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pcd/error.hpp"
#include "pcd/rng.hpp"

namespace fs = std::filesystem;

namespace pcd {

using Eigen::Index;

std::string to_string(EvalSpace s) {
  switch (s) {
    case EvalSpace::Full: return "full";
    case EvalSpace::Context: return "context";
    case EvalSpace::Both: return "both";
  }
  return "?";
}

EvalSpace eval_space_from_string(const std::string& text) {
  for (EvalSpace s : {EvalSpace::Full, EvalSpace::Context, EvalSpace::Both})
    if (to_string(s) == text) return s;
  throw ConfigError("eval space must be full, context or both, got '" + text + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<int>(d)) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

const std::set<std::string> kMethods{"dstar", "ochiai", "barinel", "gp02", "mlpfl"};

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    if (key == "steps") cfg.steps = to_int(key, v);
    else if (key == "lr") cfg.lr = to_double(key, v);
    else if (key == "op") cfg.op = v;
    else if (key == "beta_1") cfg.beta_1 = to_double(key, v);
    else if (key == "beta_T") cfg.beta_T = to_double(key, v);
    else if (key == "alpha") cfg.alpha = to_double(key, v);
    else if (key == "corpus") cfg.corpus = v;
    else if (key == "out") cfg.out_dir = v;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(v));
    else if (key == "scenarios") {
      cfg.scenarios.clear();
      for (const auto& s : split_list(v)) cfg.scenarios.push_back(scenario_from_string(s));
    } else if (key == "methods") cfg.methods = split_list(v);
    else if (key == "gamma") cfg.gamma = to_double(key, v);
    else if (key == "p_uncond") cfg.p_uncond = to_double(key, v);
    else if (key == "sample_steps") cfg.sample_steps = to_int(key, v);
    else if (key == "order") cfg.solver_order = to_int(key, v);
    else if (key == "epochs") cfg.epochs = to_int(key, v);
    else if (key == "patience") cfg.patience = to_int(key, v);
    else if (key == "batch_size") cfg.batch_size = to_int(key, v);
    else if (key == "eval_space") cfg.eval_space = eval_space_from_string(v);
    else if (key == "reject_empty") cfg.reject_empty = to_bool(key, v);
    else if (key == "jobs") cfg.jobs = to_int(key, v);
    else if (key == "channels") cfg.denoiser.base_channels = to_int(key, v);
    else if (key == "bottleneck") cfg.denoiser.bottleneck_channels = to_int(key, v);
    else if (key == "groups") cfg.denoiser.groups = to_int(key, v);
    else throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
}

namespace {

void validate(const RunConfig& cfg) {
  if (cfg.scenarios.empty()) throw ConfigError("scenario set is empty");
  if (cfg.methods.empty()) throw ConfigError("method set is empty");
  for (const auto& m : cfg.methods)
    if (!kMethods.count(m)) throw ConfigError("unknown FL method '" + m + "'");
  if (cfg.op != "AdamW" && cfg.op != "adamw") throw ConfigError("only the AdamW optimizer is available");
  if (!(cfg.alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(cfg.p_uncond >= 0.0 && cfg.p_uncond < 1.0)) throw ConfigError("p_uncond must lie in [0, 1)");
  if (!(cfg.gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
}

bool wants(const RunConfig& cfg, Scenario s) {
  return std::find(cfg.scenarios.begin(), cfg.scenarios.end(), s) != cfg.scenarios.end();
}

/// Ranking over all N statements from a scorer applied to `columns` only:
/// context statements by score, then the rest in index order.
RankedList context_ranking(const Eigen::VectorXd& reduced_scores, const std::vector<StmtIndex>& columns,
                           Index n) {
  const double floor = reduced_scores.size() ? reduced_scores.minCoeff() - 1.0 : 0.0;
  Eigen::VectorXd full = Eigen::VectorXd::Constant(n, floor);
  for (std::size_t k = 0; k < columns.size(); ++k) full(columns[k] - 1) = reduced_scores(static_cast<Index>(k));
  return rank(full);
}

Eigen::VectorXd method_scores(const std::string& method, const CoverageDataset& ds, const RunConfig& cfg,
                              std::uint64_t seed) {
  if (method == "mlpfl") {
    MlpFlConfig mc;
    mc.steps = cfg.mlp_steps;
    mc.seed = seed;
    auto trained = train_mlpfl(ds, mc);
    return virtual_suspiciousness(*trained.model);
  }
  return score(formula_from_string(method), tally(ds));
}

}  // namespace

VersionOutcome run_version(const FaultyVersion& version, const RunConfig& cfg) {
  validate(cfg);
  VersionOutcome out;
  out.id = version.id;
  out.faulty = version.faulty;

  const auto records = run_suite(version);
  const CoverageDataset ds = build_spectra(records);
  const Index n = ds.statements();

  const bool need_context = wants(cfg, Scenario::Pcd) || cfg.eval_space != EvalSpace::Full;
  FusedContext fused;
  if (need_context) {
    out.stm_sc = fault_context(ds, records).stm_sc;
    const auto stat = contribution_select(ds.matrix);
    out.stm_pca = stat.stm_pca;
    out.m = stat.m;
    fused = fuse(ds.matrix, out.stm_sc, out.stm_pca, cfg.alpha);
    out.stm_fusion = fused.stm_fusion;
  }

  for (Scenario s : cfg.scenarios) {
    const std::string name = to_string(s);
    auto rng = substream(cfg.seed, name + ":" + version.id);
    switch (s) {
      case Scenario::Origin: out.datasets[name] = origin(ds); break;
      case Scenario::Undersample: out.datasets[name] = undersample(ds, rng); break;
      case Scenario::Resample: out.datasets[name] = resample(ds, rng); break;
      case Scenario::Pcd: {
        const NoiseSchedule sched = make_schedule(cfg.steps, cfg.beta_1, cfg.beta_T);
        AdamWConfig opt;
        opt.lr = cfg.lr;
        DenoiserModel model(cfg.denoiser, derive_seed(cfg.seed, "init:" + version.id), opt);
        if (ds.passing() > ds.failing()) {
          const Eigen::MatrixXd x0 = (2 * fused.x_fusion.cast<double>().array() - 1.0).matrix().transpose();
          std::vector<ClassLabel> labels;
          for (Index i = 0; i < ds.tests(); ++i) labels.push_back(ds.errors(i) ? ClassLabel::Fail : ClassLabel::Pass);
          TrainConfig tc;
          tc.T = cfg.steps;
          tc.lr = cfg.lr;
          tc.beta1 = cfg.beta_1;
          tc.betaT = cfg.beta_T;
          tc.gamma = cfg.gamma;
          tc.p_uncond = cfg.p_uncond;
          tc.batch_size = cfg.batch_size;
          tc.epochs = cfg.epochs;
          tc.patience = cfg.patience;
          tc.seed = derive_seed(cfg.seed, "training:" + version.id);
          out.train_epochs = train(model, x0, labels, tc, sched).epochs_run;
          out.trained = true;
        }
        AugmentConfig ac;
        ac.gamma = cfg.gamma;
        ac.solver.steps = cfg.sample_steps;
        ac.solver.order = cfg.solver_order;
        ac.reject_empty = cfg.reject_empty;
        ac.seed = derive_seed(cfg.seed, "sampling:" + version.id);
        out.datasets[name] = generate_until_balanced(model, sched, ds, fused, ac);
        break;
      }
    }
  }

  std::vector<EvalSpace> spaces;
  if (cfg.eval_space != EvalSpace::Context) spaces.push_back(EvalSpace::Full);
  if (cfg.eval_space != EvalSpace::Full) spaces.push_back(EvalSpace::Context);

  for (const auto& [scen, aug] : out.datasets)
    for (EvalSpace space : spaces)
      for (const auto& method : cfg.methods) {
        const std::string key = scen + "/" + method + "/" + to_string(space);
        const auto seed = derive_seed(cfg.seed, "mlpfl:" + version.id + ":" + key);
        VersionResult vr;
        vr.version = version.id;
        vr.faulty = version.faulty;
        if (space == EvalSpace::Full) {
          vr.ranking = rank(method_scores(method, aug.data, cfg, seed));
        } else {
          CoverageDataset reduced = aug.data;
          reduced.matrix = select_columns(aug.data.matrix, out.stm_fusion);
          reduced.stmt_ids.clear();
          for (StmtIndex s : out.stm_fusion) reduced.stmt_ids.push_back("S" + std::to_string(s));
          vr.ranking = context_ranking(method_scores(method, reduced, cfg, seed), out.stm_fusion, n);
        }
        out.results[key] = std::move(vr);
      }
  return out;
}

RunResult run_versions(const std::vector<FaultyVersion>& versions, const RunConfig& cfg) {
  validate(cfg);
  RunResult res;
  res.versions.resize(versions.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < versions.size(); i = next++) {
      try {
        res.versions[i] = run_version(versions[i], cfg);
      } catch (const std::exception& e) {
        res.versions[i] = VersionOutcome{};
        res.versions[i].id = versions[i].id;
        res.versions[i].faulty = versions[i].faulty;
        res.versions[i].error = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(versions.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  res.report.policy = cfg.tie_policy;
  std::vector<std::string> spaces;
  if (cfg.eval_space != EvalSpace::Context) spaces.push_back("full");
  if (cfg.eval_space != EvalSpace::Full) spaces.push_back("context");
  for (const auto& v : res.versions) {
    if (!v.error.empty()) res.report.errors.push_back(v.id + ": " + v.error);
    if (v.trained) ++res.models_trained;
  }
  for (Scenario s : cfg.scenarios)
    for (const auto& method : cfg.methods)
      for (const auto& space : spaces) {
        const std::string key = to_string(s) + "/" + method + "/" + space;
        std::vector<VersionResult> rs;
        for (const auto& v : res.versions)
          if (v.error.empty()) rs.push_back(v.results.at(key));
        res.report.rows.push_back(summarize(to_string(s), method, space, rs, cfg.tie_policy));
      }
  attach_rimp(res.report);
  return res;
}

RunResult run_pipeline(const RunConfig& cfg) {
  validate(cfg);
  std::vector<FaultyVersion> versions;
  MetricsReport load_errors;
  for (const auto& dir : list_versions(cfg.corpus)) {
    try {
      versions.push_back(load_version(dir));
    } catch (const std::exception& e) {
      load_errors.errors.push_back(fs::path(dir).filename().string() + ": " + e.what());
    }
  }
  RunResult res = run_versions(versions, cfg);
  res.report.errors.insert(res.report.errors.begin(), load_errors.errors.begin(), load_errors.errors.end());
  if (!cfg.out_dir.empty()) emit_report(res, cfg, cfg.out_dir);
  return res;
}

std::string context_json(const VersionOutcome& v, double alpha) {
  nlohmann::ordered_json j;
  j["stm_sc"] = v.stm_sc;
  j["stm_pca"] = v.stm_pca;
  j["stm_fusion"] = v.stm_fusion;
  j["alpha"] = alpha;
  j["m"] = v.m;
  j["k"] = v.stm_fusion.size();
  return j.dump(2) + "\n";
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  os << text;
  if (!os) throw IoError("write failed for " + p.string());
}

}  // namespace

void emit_report(const RunResult& result, const RunConfig& cfg, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);

  auto doc = nlohmann::ordered_json::parse(report_json(result.report));
  nlohmann::ordered_json vs = nlohmann::ordered_json::array();
  for (const auto& v : result.versions) {
    nlohmann::ordered_json j;
    j["id"] = v.id;
    j["faulty"] = v.faulty;
    if (!v.error.empty()) {
      j["error"] = v.error;
    } else {
      nlohmann::ordered_json ranks = nlohmann::ordered_json::object();
      for (const auto& [key, r] : v.results) ranks[key] = first_fault_rank(r, cfg.tie_policy);
      j["first_fault_rank"] = ranks;
    }
    vs.push_back(j);
  }
  doc["versions"] = vs;
  write_text(fs::path(dir) / "report.json", doc.dump(2) + "\n");
  write_text(fs::path(dir) / "report.txt", report_table(result.report));
  write_text(fs::path(dir) / "rimp.csv", rimp_csv(result.report));

  for (const auto& v : result.versions) {
    if (!v.error.empty()) continue;
    const fs::path vd = fs::path(dir) / "versions" / v.id;
    fs::create_directories(vd, ec);
    if (ec) throw IoError("cannot create " + vd.string());
    if (!v.stm_sc.empty()) write_text(vd / "context.json", context_json(v, cfg.alpha));
    for (const auto& [scen, aug] : v.datasets) write_text(vd / (scen + ".csv"), to_csv(aug.data, true));
  }
}

}  // namespace pcd
